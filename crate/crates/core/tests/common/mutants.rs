//! Hand-labeled metamorphic variants of the reference files. Each removes a
//! construct a rule relies on, or grafts one onto the true-positive file.

use retriage::triage::CauseType;

pub struct Mutant {
    pub name: &'static str,
    pub base: &'static str,
    pub function: &'static str,
    pub rule: CauseType,
    /// Expected outcome of `rule` on every finding of `function`.
    pub rule_matches: bool,
    /// Expected classification with all rules, when it is part of the label.
    pub suppressed: Option<bool>,
    pub mutate: fn(&str) -> String,
}

fn replace_once(src: &str, from: &str, to: &str) -> String {
    assert!(src.contains(from), "mutation anchor `{from}` not found");
    src.replacen(from, to, 1)
}

fn delete_line_containing(src: &str, needle: &str, occurrence: usize) -> String {
    let mut seen = 0;
    let mut out = Vec::new();
    let mut deleted = false;
    for line in src.lines() {
        if line.contains(needle) {
            seen += 1;
            if seen == occurrence {
                deleted = true;
                continue;
            }
        }
        out.push(line);
    }
    assert!(deleted, "line `{needle}` #{occurrence} not found");
    out.join("\n") + "\n"
}

const DAO_OWNER: &str = "contract SimpleDAO {\n    address owner;\n    modifier onlyOwner { require(msg.sender == owner); _; }\n";
const DAO_LOCK: &str =
    "contract SimpleDAO {\n    bool locked;\n    modifier noReentry { require(!locked); locked = true; _; locked = false; }\n";

pub fn all() -> Vec<Mutant> {
    use CauseType::*;
    vec![
        Mutant {
            name: "modifier removed from guarded call",
            base: "owner_only_call.sol",
            function: "execute",
            rule: IdentityControl,
            rule_matches: false,
            suppressed: Some(false),
            mutate: |s| replace_once(s, " external onlyOwner {", " external {"),
        },
        Mutant {
            name: "owner check deleted from modifier",
            base: "owner_only_call.sol",
            function: "execute",
            rule: IdentityControl,
            rule_matches: false,
            suppressed: Some(false),
            mutate: |s| delete_line_containing(s, "require(msg.sender == owner);", 1),
        },
        Mutant {
            name: "owner modifier added to dao",
            base: "simple_dao.sol",
            function: "withdraw",
            rule: IdentityControl,
            rule_matches: true,
            suppressed: Some(true),
            mutate: |s| replace_once(&replace_once(s, "contract SimpleDAO {\n", DAO_OWNER), "public{", "public onlyOwner {"),
        },
        Mutant {
            name: "hardcoded initializer removed",
            base: "hardcoded_token.sol",
            function: "register",
            rule: AddressControl,
            rule_matches: false,
            suppressed: None,
            mutate: |s| replace_once(s, "daiAddress = 0x6B175474E89094C44Da98b954EedeAC495271d0F;", "daiAddress;"),
        },
        Mutant {
            name: "token address made settable",
            base: "hardcoded_token.sol",
            function: "register",
            rule: AddressControl,
            rule_matches: false,
            suppressed: None,
            mutate: |s| replace_once(s, "address public vault;\n", "address public vault;\n    function setDai(IERC20 d) public { dai = d; }\n"),
        },
        Mutant {
            name: "hardcoded target grafted onto dao",
            base: "simple_dao.sol",
            function: "withdraw",
            rule: AddressControl,
            rule_matches: true,
            suppressed: Some(true),
            mutate: |s| replace_once(s, "msg.sender.call.value", "address(0x6B175474E89094C44Da98b954EedeAC495271d0F).call.value"),
        },
        Mutant {
            name: "lock never set before the body",
            base: "vesting_lock.sol",
            function: "withdraw",
            rule: ReentrancyLock,
            rule_matches: false,
            suppressed: None,
            mutate: |s| delete_line_containing(s, "_notEntered = false;", 1),
        },
        Mutant {
            name: "lock never released",
            base: "vesting_lock.sol",
            function: "withdraw",
            rule: ReentrancyLock,
            rule_matches: false,
            suppressed: None,
            mutate: |s| delete_line_containing(s, "_notEntered = true;", 2),
        },
        Mutant {
            name: "lock check deleted",
            base: "vesting_lock.sol",
            function: "withdraw",
            rule: ReentrancyLock,
            rule_matches: false,
            suppressed: None,
            mutate: |s| delete_line_containing(s, "require(_notEntered);", 1),
        },
        Mutant {
            name: "mutex lock added to dao",
            base: "simple_dao.sol",
            function: "withdraw",
            rule: ReentrancyLock,
            rule_matches: true,
            suppressed: Some(true),
            mutate: |s| replace_once(&replace_once(s, "contract SimpleDAO {\n", DAO_LOCK), "public{", "public noReentry {"),
        },
        Mutant {
            name: "state write after balance query",
            base: "token_balance_query.sol",
            function: "getTokenBal",
            rule: NoStateChange,
            rule_matches: false,
            suppressed: None,
            mutate: |s| {
                let s = replace_once(s, "\tcontract Bitcash {\n", "\tcontract Bitcash {\n    uint lastBal;\n");
                replace_once(&s, "return bal;", "lastBal = bal; return bal;")
            },
        },
        Mutant {
            name: "two chained balance queries",
            base: "token_balance_query.sol",
            function: "getTokenBal",
            rule: NoStateChange,
            rule_matches: true,
            suppressed: Some(true),
            mutate: |s| replace_once(s, "uint bal = t.balanceOf(who);", "uint bal = t.balanceOf(who) + t.balanceOf(tokenAddr);"),
        },
        Mutant {
            name: "ether sent after balance query",
            base: "token_balance_query.sol",
            function: "getTokenBal",
            rule: NoStateChange,
            rule_matches: false,
            suppressed: None,
            mutate: |s| replace_once(s, "return bal;", "who.call.value(bal)(\"\"); return bal;"),
        },
        Mutant {
            name: "deposit balance guards a withdrawal",
            base: "token_deposit.sol",
            function: "depositToken",
            rule: NoFinancialRisk,
            rule_matches: false,
            suppressed: Some(false),
            mutate: |s| {
                replace_once(
                    s,
                    "    function safeAdd",
                    "    function withdraw(address token, uint amount) public {\n        require(tokens[token][msg.sender] >= amount);\n        require(msg.sender.call.value(amount)());\n        tokens[token][msg.sender] -= amount;\n    }\n    function safeAdd",
                )
            },
        },
        Mutant {
            name: "deposit pulls tokens to a third party while paying out",
            base: "token_deposit.sol",
            function: "depositToken",
            rule: NoFinancialRisk,
            rule_matches: false,
            suppressed: None,
            mutate: |s| {
                let s = replace_once(s, "transferFrom(msg.sender, this, amount)", "transferFrom(msg.sender, token, amount)");
                replace_once(&s, "    \t// ...\n", "    \tmsg.sender.transfer(1);\n")
            },
        },
        Mutant {
            name: "value from parameter without equality check",
            base: "eth_dai_trade.sol",
            function: "tradeEthVsDAI",
            rule: SpecialTransferValue,
            rule_matches: false,
            suppressed: Some(false),
            mutate: |s| {
                let s = delete_line_containing(s, "require(msg.value == srcAmount);", 1);
                replace_once(&s, "deposit.value(msg.value)", "deposit.value(srcAmount)")
            },
        },
        Mutant {
            name: "value from parameter checked equal to msg.value",
            base: "eth_dai_trade.sol",
            function: "tradeEthVsDAI",
            rule: SpecialTransferValue,
            rule_matches: true,
            suppressed: Some(true),
            mutate: |s| replace_once(s, "deposit.value(msg.value)", "deposit.value(srcAmount)"),
        },
        Mutant {
            name: "half of msg.value",
            base: "eth_dai_trade.sol",
            function: "tradeEthVsDAI",
            rule: SpecialTransferValue,
            rule_matches: false,
            suppressed: None,
            mutate: |s| replace_once(s, "deposit.value(msg.value)", "deposit.value(msg.value / 2)"),
        },
        Mutant {
            name: "msg.value forwarded by dao",
            base: "simple_dao.sol",
            function: "withdraw",
            rule: SpecialTransferValue,
            rule_matches: true,
            suppressed: Some(true),
            mutate: |s| replace_once(s, "call.value(amount)", "call.value(msg.value)"),
        },
        Mutant {
            name: "transfer replaced by call",
            base: "internal_transfer.sol",
            function: "_withdraw",
            rule: GasStipendTransferSend,
            rule_matches: false,
            suppressed: None,
            mutate: |s| replace_once(s, "to.transfer(amount);", "to.call.value(amount)(\"\");"),
        },
        Mutant {
            name: "dao pays with transfer",
            base: "simple_dao.sol",
            function: "withdraw",
            rule: GasStipendTransferSend,
            rule_matches: true,
            suppressed: Some(true),
            mutate: |s| replace_once(s, "require(msg.sender.call.value(amount)());", "msg.sender.transfer(amount);"),
        },
        Mutant {
            name: "internal helper made public",
            base: "internal_transfer.sol",
            function: "_withdraw",
            rule: NonCallable,
            rule_matches: false,
            suppressed: None,
            mutate: |s| replace_once(s, "uint256 amount) internal {", "uint256 amount) public {"),
        },
        Mutant {
            name: "internal helper called from a public function",
            base: "internal_transfer.sol",
            function: "_withdraw",
            rule: NonCallable,
            rule_matches: false,
            suppressed: None,
            mutate: |s| {
                replace_once(
                    s,
                    "contract Exchange {\n",
                    "contract Exchange {\n    function withdraw(address payable to, uint256 amount) public {\n        _withdraw(msg.sender, to, address(0), amount);\n    }\n",
                )
            },
        },
        Mutant {
            name: "dao withdraw made internal",
            base: "simple_dao.sol",
            function: "withdraw",
            rule: NonCallable,
            rule_matches: true,
            suppressed: Some(true),
            mutate: |s| replace_once(s, "public{", "internal{"),
        },
        Mutant {
            name: "dao payout moved into the constructor",
            base: "simple_dao.sol",
            function: "constructor",
            rule: NonCallable,
            rule_matches: true,
            suppressed: Some(true),
            mutate: |s| replace_once(s, "function withdraw(uint amount) public{", "constructor(uint amount) public{"),
        },
    ]
}
