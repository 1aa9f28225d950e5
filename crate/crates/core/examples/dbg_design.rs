use logibandit::design::*;
use logibandit::types::ArmVector;
use logibandit::rng::KeyedStream;
use nalgebra::DVector;
use std::time::Instant;

fn random_unit_arm(stream: &mut KeyedStream, d: usize) -> ArmVector {
    loop {
        let mut v = DVector::zeros(d);
        for i in 0..d { v[i] = stream.next_gaussian(); }
        let n = v.norm();
        if n > 1e-6 {
            let scale = (0.3 + 0.7 * stream.next_u01()) / n;
            return ArmVector::from_vector(v * scale).unwrap();
        }
    }
}

fn main() {
    let t0 = Instant::now();
    let mut stream = KeyedStream::new(7);
    for case in 0..20 {
        let d = [3usize, 5, 8][case % 3];
        let n = d + 1 + (case % (2 * d));
        let arms: Vec<ArmVector> = (0..n).map(|_| random_unit_arm(&mut stream, d)).collect();
        let res = minimize_design(&arms, &[DesignObjective::g_optimal()], DesignOptions::default()).unwrap();
        println!("d={d} |X|={n} value={:.5} (d*1.01={:.3}) iters={} conv={}", res.value, d as f64 * 1.01, res.iterations, res.converged);
        assert!(res.value <= d as f64 * 1.01);
    }
    println!("total time: {:?}", t0.elapsed());
}
