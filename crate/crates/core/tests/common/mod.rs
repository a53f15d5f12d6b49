#![allow(dead_code)]

use std::io::Write;

use isotns::isotns::{IsoTns, MosesOptions, Side};
use isotns::tensor::DenseTensor;
use isotns::C64;
use rand::Rng;
use rand_distr::StandardNormal;

/// Moves the center from the top-left corner to `(x, y)`.
pub fn center_at(s: &mut IsoTns, x: usize, y: usize) {
    while s.center().0 < x {
        s.shift_center_to_top().unwrap();
        s.moses_move(Side::Right, &MosesOptions::default()).unwrap();
    }
    s.shift_center_to_row(y).unwrap();
}

pub fn random_unit<R: Rng>(len: usize, rng: &mut R) -> Vec<C64> {
    let v: Vec<C64> = (0..len)
        .map(|_| C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
        .collect();
    let n = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    v.into_iter().map(|z| z / n).collect()
}

pub fn max_diff(a: &[C64], b: &[C64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

/// `|<a|b>| / (|a| |b|)`.
pub fn fidelity(a: &DenseTensor, b: &DenseTensor) -> f64 {
    let o: C64 = a.data().iter().zip(b.data()).map(|(x, y)| x.conj() * y).sum();
    o.norm() / (a.norm() * b.norm())
}

/// Writes one verdict line past the test harness capture, then fails on `false`.
pub fn verdict(id: usize, name: &str, pass: bool, detail: &str) {
    let line = format!("acceptance {id} {name}: {} ({detail})\n", if pass { "PASS" } else { "FAIL" });
    std::io::stderr().write_all(line.as_bytes()).unwrap();
    assert!(pass, "{}", line.trim_end());
}
