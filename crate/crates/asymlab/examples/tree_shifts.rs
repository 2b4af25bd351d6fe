//! Weighted shifts on directed trees: structure, asymptotes, similarity and co-rank.
//!
//! Run with `cargo run --example tree_shifts`.

use asymlab::dirtree::{binary_tree_asymptotics, corank_by_matrix_rank, leaf_tree, tilde_tree, TailWeights, TreeShift};
use asymlab::lazyop::{TreeVertex, WeightGen, WeightRule};

fn constant(v: f64) -> WeightGen {
    WeightGen::new(WeightRule::Constant { value: v })
}

fn parse(text: &str) -> asymlab::Result<TreeShift> {
    let value = serde_json::from_str(text).map_err(|e| asymlab::Error::Input(e.to_string()))?;
    TreeShift::from_json(&value)
}

fn main() -> asymlab::Result<()> {
    let fig2 = parse(include_str!("data/fig2.json"))?;
    println!(
        "fig2: Br = {}, corank = {} (matrix rank: {}), ||S|| = {:.4}",
        fig2.tree.branching_index(),
        fig2.tree.corank(),
        corank_by_matrix_rank(&fig2)?,
        fig2.norm()
    );

    let binary = parse(include_str!("data/binary_depth2.json"))?;
    let a = binary.isometric_asymptote()?;
    for (name, alpha) in &a.alpha_core {
        println!("binary depth 2: α({name}) = {:.4}", alpha.value);
    }
    println!("asymptote class {:?}, corank {}", a.class, a.corank);

    let full = binary_tree_asymptotics();
    println!("full binary tree with weights 1/√2: class {:?}", full.class);

    let leaf = leaf_tree(constant(1.0), 1.0, &[1.0, 1.0], None, &[1.0])?;
    let s = leaf.leaf_tree_similarity()?;
    println!(
        "leaf tree: {} leaves, intertwining residual {:.1e} (exact zero: {})",
        s.leaves, s.intertwining.max_residual, s.intertwining.exact_zero
    );

    let harmonic = TailWeights { gen: WeightGen::new(WeightRule::Telescoping { j0: 2 }), start: 2 };
    let tilde = tilde_tree(constant(1.0), 1.0, TailWeights { gen: constant(1.0), start: 1 }, harmonic)?;
    let r = tilde.tilde_tree_report(30, 500)?;
    println!("tilde tree: similar to a unilateral shift = {:?}, cyclic = {:?}", r.similar, r.cyclic);
    println!("α at the top: {:.6}", tilde.alpha(&TreeVertex::Core(0))?.value);
    Ok(())
}
