//! Min-norm point of a set of task gradients.
//!
//! ```text
//! cargo run --example frank_wolfe
//! ```

use aesthetic_mtl::moo::{frank_wolfe_min_norm, min_norm_2, FrankWolfeConfig};
use aesthetic_mtl::nn::{GradSpace, GradientSet};

fn main() -> aesthetic_mtl::Result<()> {
    // two conflicting gradients: closed form and solver agree
    let (g1, g2) = (vec![1.0, 0.0], vec![-0.5, 1.0]);
    let closed = min_norm_2(&g1, &g2)?;
    println!("two tasks, closed form δ = {:?}", closed.as_slice());

    let set = GradientSet::new(GradSpace::Representation, vec![g1, g2])?;
    let r = frank_wolfe_min_norm(&set, FrankWolfeConfig::default())?;
    println!("two tasks, solver δ = {:?}, ‖d‖ = {:.6}", r.delta.as_slice(), r.combined_norm);

    // the origin lies inside this hull, so no common descent direction exists
    let set = GradientSet::new(
        GradSpace::Representation,
        vec![vec![1.0, 0.0], vec![-1.0, 1.0], vec![-1.0, -1.0]],
    )?;
    let r = frank_wolfe_min_norm(&set, FrankWolfeConfig::default())?;
    println!(
        "three tasks around the origin: δ = {:?}, ‖d‖ = {:.2e}, {} iterations, converged {}",
        r.delta.as_slice(),
        r.combined_norm,
        r.iterations,
        r.converged
    );
    Ok(())
}
