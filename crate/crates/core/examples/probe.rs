use coevolve_core::riccati::predict_blowup;
use coevolve_core::*;
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
fn main() {
    let mut r = rand_pcg::Pcg64::seed_from_u64(707);
    for k in 0..20 {
        let n = r.random_range(2..=6);
        let u = DMatrix::from_fn(n, n, |_, _| r.random_range(-1.0..1.0))
            .qr()
            .q();
        let spectrum: Vec<f64> = (0..n).map(|_| r.random_range(-1.0..1.0)).collect();
        let idx = r.random_range(0..n);
        let s: f64 = r.random_range(0.5..1.5);
        let w0 = &u * DMatrix::from_diagonal(&DVector::from_vec(spectrum.clone())) * u.transpose();
        let s0 = SystemState::new(u.column(idx) * s, w0).unwrap();
        let cfg = SimConfig {
            blowup_threshold: 1e6,
            ..SimConfig::continuous()
        };
        let traj = simulate(&s0, &GraphTopology::complete(n, true), &cfg).unwrap();
        let mut dc: Vec<f64> = spectrum.iter().map(|b| -b * b).collect();
        dc[idx] += s * s;
        let p = predict_blowup(&spectrum, &dc);
        let worst = traj
            .samples
            .iter()
            .map(|st| {
                let a = st.v.dot(&(&st.w * &st.v)) / st.v.norm_squared();
                (&st.w * &st.v - &st.v * a).norm() / st.v.norm()
            })
            .fold(0.0, f64::max);
        println!("{k} n={n} idx={idx} b={:.3} s={s:.3} pred t*={:.3} mode={:?} case={:?}  stop={:?} at {:.3} worst={worst:.2e}", spectrum[idx], p.t_star, p.mode_index, p.case, traj.stop_reason, traj.stop_time);
    }
}
