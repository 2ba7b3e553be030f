//! Parse a Solidity file and print its contracts, functions and diagnostics.
//!
//! cargo run --example parse_source -- corpus/canonical/simple_dao.sol

use retriage::frontend::parse_source;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let path = std::env::args().nth(1).unwrap_or_else(|| "corpus/canonical/simple_dao.sol".into());
    let text = std::fs::read_to_string(&path)?;
    let unit = parse_source(&text, &path)?;
    if let Some(p) = &unit.pragma {
        println!("pragma {p}");
    }
    for c in &unit.contracts {
        println!("{:?} {} (line {})", c.kind, c.name, c.span.line);
        for v in &c.state_vars {
            println!("  state {} {}", v.type_name, v.name);
        }
        for m in &c.modifiers {
            println!("  modifier {}", m.name);
        }
        for f in &c.functions {
            let mods: Vec<&str> = f.modifiers_invoked.iter().map(|m| m.name.as_str()).collect();
            println!("  function {} {:?} [{}]", f.name, f.visibility, mods.join(", "));
        }
    }
    for d in &unit.diagnostics {
        println!("{}: {:?} {}", d.span, d.severity, d.message);
    }
    Ok(())
}
