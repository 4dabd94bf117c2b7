use cubelab::generator::hermon_salez;
use cubelab::numeric::Scalar;
use num::BigRational;
use std::time::Instant;

fn main() {
    for (n, k) in [(7usize, 3usize), (8, 4), (9, 4), (9, 5)] {
        let p: Vec<BigRational> = (0..n).map(|i| BigRational::from_ratio(1 + (i as i64 * 5 + 3) % 15, 16)).collect();
        let t0 = Instant::now();
        let g = hermon_salez(&p, k).unwrap();
        let build = t0.elapsed();
        let t1 = Instant::now();
        let viol = g.detailed_balance_violation();
        let check = t1.elapsed();
        let t2 = Instant::now();
        let stab = g.stability_functional();
        let stab_t = t2.elapsed();
        println!("rational n={} k={} size={} build={:?} db={:?} ({:?}) stab={} ({:?})",
                 n, k, g.size(), build, Scalar::to_f64(&viol), check, stab.to_f64(), stab_t);
    }
    for (n, k) in [(9usize, 4usize), (10, 5), (11, 5), (12, 6)] {
        let p: Vec<f64> = (0..n).map(|i| (1.0 + (i as f64 * 5.0 + 3.0) % 15.0) / 16.0).collect();
        let t0 = Instant::now();
        let g = hermon_salez(&p, k).unwrap();
        let build = t0.elapsed();
        let viol = g.detailed_balance_violation();
        println!("float    n={} k={} size={} build={:?} db={:e}", n, k, g.size(), build, viol);
    }
}
