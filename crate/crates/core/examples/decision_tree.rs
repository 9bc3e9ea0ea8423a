//! Learns a CART tree on Common/IN/OUT labels and turns it into rules.

use expvec::criteria::{CriteriaRow, CriteriaTable, LABEL_COMMON, LABEL_IN, LABEL_OUT};
use expvec::rules::{apply_rule_set, train_tree, TreeParams};

fn row(i: usize) -> CriteriaRow {
    // frequent, similar words are "common"; rare ones "out"
    let wf = (i * 37 % 100) as f64;
    let ws = (i * 53 % 90) as f64 / 10.0;
    let nz = (i % 7) as f64;
    let label = if wf > 60.0 && ws > 4.0 {
        LABEL_COMMON
    } else if ws > 6.0 {
        LABEL_IN
    } else {
        LABEL_OUT
    };
    CriteriaRow {
        word: format!("w{i:03}/N"),
        wf,
        ws,
        nz,
        wf_norm: 0.0,
        ws_norm: 0.0,
        nz_norm: 0.0,
        label: Some(label),
    }
}

fn main() -> anyhow::Result<()> {
    let table = CriteriaTable::from_rows((0..300).map(row).collect(), false);
    let params = TreeParams {
        max_depth: 4,
        min_leaf: 5,
        normalized: false,
    };
    let tree = train_tree(&table, None, &params)?;
    println!("depth {}, {} leaves", tree.depth(), tree.n_leaves());
    let rules = tree.to_rules();
    print!("{}", rules.to_text());

    let by_rules = apply_rule_set(&rules, &table)?;
    let by_tree = table.rows().iter().filter(|r| tree.selects(r)).count();
    println!(
        "selected: {} by rules, {by_tree} by the tree",
        by_rules.len()
    );
    Ok(())
}
