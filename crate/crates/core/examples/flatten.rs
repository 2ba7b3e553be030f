//! Show the inheritance order and the flattened functions of every contract,
//! with modifiers inlined.
//!
//! cargo run --example flatten -- corpus/canonical/vesting_lock.sol

use retriage::frontend::parse_source;
use retriage::frontend::render::stmt_text;
use retriage::lowering::linearize;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let path = std::env::args().nth(1).unwrap_or_else(|| "corpus/canonical/vesting_lock.sol".into());
    let text = std::fs::read_to_string(&path)?;
    let unit = parse_source(&text, &path)?;
    let lowered = linearize(&unit, &[]);
    for c in &lowered.contracts {
        println!("{} <- {}", c.name, c.linearization.join(" <- "));
        for v in &c.state_vars {
            println!("  state {} (from {})", v.def.name, v.origin);
        }
        for f in &c.functions {
            println!("  {}:", f.qualified_name());
            for s in &f.body.stmts {
                println!("    {}", stmt_text(s));
            }
        }
    }
    for d in &lowered.diagnostics {
        println!("{}: {}", d.span, d.message);
    }
    Ok(())
}
