//! Park transform round trip on a balanced three-phase set: a positive-sequence wave rotating
//! with the frame becomes a constant dq pair.
//!
//! Run with `cargo run --release --example dq_frame`.

use groundfault::model::{dq_transform, frame_angle, inverse_dq_transform};
use groundfault::params::MicrogridParams;

fn main() {
    let p = MicrogridParams::default();
    let amplitude = 381.0;
    let two_thirds_pi = 2.0 * std::f64::consts::PI / 3.0;
    for k in [0usize, 50, 100, 150, 200] {
        let theta = frame_angle(p.omega, p.ts, k);
        let abc = [
            amplitude * theta.cos(),
            amplitude * (theta - two_thirds_pi).cos(),
            amplitude * (theta + two_thirds_pi).cos(),
        ];
        let dq = dq_transform(abc, theta);
        let back = inverse_dq_transform(dq, theta);
        let err = abc.iter().zip(back).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        println!("k={k:>3} theta={theta:.4} dq=[{:.6}, {:.6}] round-trip error {err:.1e}", dq[0], dq[1]);
    }
}
