//! Greedy nearest matching versus optimal transport on a small cost matrix
//! where greedy commits too early.

use stereo_ot::transport::{binarize, naive_match, solve_ot, CostMatrix, MarginalWeights, MatchSource};

fn main() {
    let c = CostMatrix::from_rows(&[
        vec![1.0, 2.0, 9.0],
        vec![1.5, 9.0, 9.0],
        vec![9.0, 2.5, 3.0],
    ])
    .unwrap();

    let greedy = naive_match(&c);
    let greedy_cost: f64 = greedy.pairs().iter().map(|&(i, j)| c.get(i, j)).sum();
    println!("naive  {:?}  total cost {greedy_cost}", greedy.pairs());

    let plan = solve_ot(&c, &MarginalWeights::uniform(3, 3)).unwrap();
    let ot = binarize(&plan, MatchSource::Ot);
    let ot_cost: f64 = ot.pairs().iter().map(|&(i, j)| c.get(i, j)).sum();
    println!("ot     {:?}  total cost {ot_cost}", ot.pairs());
    println!("plan objective (mass 1/3 per pair) {:.4}", plan.objective());
}
