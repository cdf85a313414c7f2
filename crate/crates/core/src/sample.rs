//! Seeded sampling of points and balls for property checks.

use crate::ball::Ball;
use crate::padic::{PAdic, PAdicVec};
use crate::rng::SplitMix64;

/// A point whose digits at positions `low .. low + prec` are uniform.
pub fn random_point(rng: &mut SplitMix64, p: u32, d: usize, low: i32, prec: u32) -> PAdicVec {
    PAdicVec(
        (0..d)
            .map(|_| {
                let digits: Vec<u8> = (0..prec).map(|_| rng.uniform(p as u64) as u8).collect();
                PAdic::from_digits(p, prec, low, &digits).expect("digits below p")
            })
            .collect(),
    )
}

/// A uniformly chosen ball of level `level` inside the ball of level `top` around the origin.
pub fn random_ball(rng: &mut SplitMix64, p: u32, d: usize, top: i32, level: i32) -> Ball {
    let mut b = Ball::around_origin(p, d, top);
    for _ in top..level {
        let c: Vec<u32> = (0..d).map(|_| rng.uniform(p as u64) as u32).collect();
        b = b.child(&c);
    }
    b
}
