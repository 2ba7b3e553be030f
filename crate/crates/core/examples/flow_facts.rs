//! Print call sites, guards and state writes after each call.
//!
//! cargo run --example flow_facts -- corpus/canonical/simple_dao.sol

use retriage::budget::Deadline;
use retriage::flow::{analyze_contracts, guards_of, writes_after};
use retriage::frontend::parse_source;
use retriage::frontend::render::expr_text;
use retriage::lowering::linearize;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let path = std::env::args().nth(1).unwrap_or_else(|| "corpus/canonical/simple_dao.sol".into());
    let text = std::fs::read_to_string(&path)?;
    let unit = parse_source(&text, &path)?;
    let facts = analyze_contracts(linearize(&unit, &[]).contracts, &Deadline::none())?;
    for c in &facts {
        println!("contract {} fixed={:?}", c.flat.name, c.fixed_vars);
        for ff in &c.functions {
            println!("  {} blocks={} written={:?}", ff.qualified_name, ff.cfg.blocks.len(), ff.written);
            for site in &ff.sites {
                println!("    {:?} at line {}: {}", site.call_kind, site.location.line, expr_text(&site.target_expr));
                for g in guards_of(&ff.cfg, site.pos) {
                    let not = if g.negated { "!" } else { "" };
                    println!("      guard {not}({}) via {:?}", expr_text(&g.expr), g.source);
                }
                for w in writes_after(&ff.cfg, site.pos, site.location) {
                    println!("      then writes {} at line {}", w.target, w.location.line);
                }
            }
        }
    }
    Ok(())
}
