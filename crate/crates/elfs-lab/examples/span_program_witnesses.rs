//! Span-program witness sizes: the positive witness w_plus(x) with its
//! overlap identity ||P_{Q_x} w_0||^2 w_plus(x) = 1, the optimal
//! min-error negative witness computed two ways (direct optimization and
//! the pseudoinverse identity), and the bridge to a projector-pair
//! transduction instance with catalyst size w_tilde_minus(x) - 1.
//!
//!     cargo run --example span_program_witnesses

use elfs_lab::span_program::{
    fixtures, negative_witness, positive_witness, pseudoinverse_identity, to_projector_instance,
};
use elfs_lab::Result;

fn main() -> Result<()> {
    // OR of two bits: A = (1 1), tau = 1.
    let p = fixtures::or_pair();
    for x in [vec![1, 1], vec![1, 0]] {
        let (w_plus, _) = positive_witness(&p, &x)?;
        let (e_minus, w_tilde, _) = negative_witness(&p, &x)?;
        println!("or_pair {x:?}: w_plus = {w_plus:.6}, e_minus = {e_minus:.6}, w_tilde = {w_tilde:.6}");
    }
    let (e_minus, w_tilde, _) = negative_witness(&p, &[0, 0])?;
    println!("or_pair [0, 0] (negative input): e_minus = {e_minus:.6}, w_tilde = {w_tilde:.6}");

    // A 2x3 program: the negative witness now optimizes over a family.
    let p = fixtures::two_by_three();
    for x in [vec![1, 1, 0], vec![0, 1, 1], vec![1, 1, 1]] {
        let rep = pseudoinverse_identity(&p, &x)?;
        println!(
            "two_by_three {x:?}: w_tilde = {:.6}, pseudoinverse side = {:.6}",
            rep.w_tilde_minus, rep.pseudoinverse_side
        );
        if p.is_positive(&x)? {
            let inst = to_projector_instance(&p, &x)?;
            println!(
                "  bridge: w_plus = {:.6}, catalyst size W = {:.6} = w_tilde - 1",
                inst.w_plus, inst.w_expected
            );
        }
    }
    Ok(())
}
