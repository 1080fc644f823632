// Random directions on the l1 and l2 unit spheres, and projection onto the
// probability simplex.

use zofl::vecspace::{project, sample_ball, sample_sphere, DenseVector, FeasibleSet, Lp, Norm, RngStream, StreamId};

pub fn run_example() -> zofl::Result<()> {
    let mut rng = RngStream::new(42, StreamId::new(0, 0, 0));
    for scheme in [Lp::L1, Lp::L2] {
        let e = sample_sphere(8, scheme, &mut rng);
        let u = sample_ball(8, scheme, &mut rng);
        println!("{scheme:?} sphere: |e| = {:.12}  ball: |u| = {:.4}", e.norm(scheme.norm()), u.norm(scheme.norm()));
    }

    // Same seed and stream id, same draws.
    let a = sample_sphere(4, Lp::L1, &mut RngStream::new(7, StreamId::new(3, 1, 0)));
    let b = sample_sphere(4, Lp::L1, &mut RngStream::new(7, StreamId::new(3, 1, 0)));
    assert_eq!(a, b);

    let x = DenseVector::new(vec![0.6, 0.6, -0.2])?;
    let p = project(&x, &FeasibleSet::Simplex);
    println!("project {:?} -> {:?} (sum {:.3})", x.as_slice(), p.as_slice(), p.iter().sum::<f64>());
    let ball = project(&DenseVector::new(vec![3.0, 4.0])?, &FeasibleSet::L2Ball { radius: 1.0 });
    println!("onto the unit ball: {:?}, norm {:.3}", ball.as_slice(), ball.norm(Norm::L2));
    Ok(())
}

#[allow(dead_code)]
fn main() -> zofl::Result<()> {
    run_example()
}
