//! Evaluate every functional on one state: energy parts, BD entropy,
//! Mellet-Vasseur functional, dissipations with the kernel lower bound,
//! and the Jungel inequalities.

use nlns::config::parse_config;
use nlns::dynamics::initial_data;
use nlns::dynamics::run::initial_profile;
use nlns::functionals::{bd_entropy, dissipation_suite, energy, jungel_check, moment2, mv_functional, mv_table};

fn main() -> nlns::Result<()> {
    let c = parse_config(
        "dim=2\nn=32\nL=4\nalpha=0.5\npreset=galerkin-full\nvelocity_amplitude=0.4\ninitial=random\nseed=5\n",
    )?;
    let grid = c.grid()?;
    let (rho0, u0) = initial_profile(&c)?;
    let state = initial_data(&rho0, &u0, &c.params)?.state;
    let kernel = c.params.kernel_table(&grid)?;

    let e = energy(&state, &c.params, &kernel)?;
    println!("energy {:.6}: {e:?}", e.total());
    println!("BD entropy {:.6}", bd_entropy(&state, &c.params, &kernel)?);
    let (mv_u, mv_pair) = mv_functional(&state, &mv_table(&grid))?;
    println!("MV: velocity part {mv_u:.6}, pair part {mv_pair:.6}");
    println!("double second moment {:.6}", moment2(&state.rho)?);

    let d = dissipation_suite(&state, &c.params, &kernel)?;
    println!("dissipation total {:.6e}: {:?}", d.dissipations.total(), d.dissipations);
    println!(
        "kernel pairing {:.6} >= {:.6}: {}",
        d.kernel_pairing, d.kernel_lower_bound, d.kernel_bound_holds
    );

    let j = jungel_check(&state.rho)?;
    println!("Jungel: {:.4e} >= {:.4e} and {:.4e}: {}", j.lhs, j.rhs1, j.rhs2, j.pass);
    Ok(())
}
