// Solve a small assignment game, print the matching and the equilibrium
// payoffs, and certify it against the brute-force oracle.
use matchscore::{brute_force_assignment, solve_assignment, verify_stability, ValueMatrix};

fn main() -> matchscore::Result<()> {
    let values = vec![
        vec![5.0, 8.0, 2.0, -1.0],
        vec![7.0, 9.0, 6.0, 3.0],
        vec![2.0, 3.0, 0.5, 4.0],
        vec![-2.0, 1.0, 3.0, 2.5],
    ];
    let mut blocked = vec![vec![false; 4]; 4];
    blocked[1][1] = true;
    let vm = ValueMatrix::with_blocked(values, blocked)?;

    let res = solve_assignment(&vm)?;
    println!("matching: {:?}", res.matching);
    println!("total surplus: {}", res.objective);
    let duals = res.duals.as_ref().expect("solver returns duals");
    println!("buyer payoffs u: {:?}", duals.buyer);
    println!("seller prices p: {:?}", duals.seller);
    println!("sum u + sum p: {}", res.dual_objective().unwrap());

    let oracle = brute_force_assignment(&vm)?;
    println!("brute force surplus: {}", oracle.objective);
    let report = verify_stability(&vm, &res);
    println!("stable: {}", report.is_stable());
    Ok(())
}
