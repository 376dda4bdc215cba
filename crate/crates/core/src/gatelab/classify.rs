use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::FRAC_PI_4;

use super::cartan::{cartan_unitary, CartanCoordinates};
use super::choi::{choi_unchecked, purities, EntropyPair};

pub const DEFAULT_TOL: f64 = 0.05;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum GateLabel {
    I,
    Swap,
    ISwap,
    Cz,
    BoundaryLine,
    Interior,
}

impl GateLabel {
    pub fn is_vertex(&self) -> bool {
        matches!(self, GateLabel::I | GateLabel::Swap | GateLabel::ISwap | GateLabel::Cz)
    }
}

impl fmt::Display for GateLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            GateLabel::I => "I",
            GateLabel::Swap => "SWAP",
            GateLabel::ISwap => "iSWAP",
            GateLabel::Cz => "CZ",
            GateLabel::BoundaryLine => "BOUNDARY_LINE",
            GateLabel::Interior => "INTERIOR",
        })
    }
}

/// Entropy-plane vertices `(S_AC, S_AD)` of the four named gates.
pub const VERTICES: [(GateLabel, (f64, f64)); 4] = [
    (GateLabel::I, (0.0, 2.0)),
    (GateLabel::Swap, (2.0, 0.0)),
    (GateLabel::ISwap, (2.0, 1.0)),
    (GateLabel::Cz, (1.0, 2.0)),
];

pub fn classify_gate(e: &EntropyPair, tol: f64) -> GateLabel {
    let nearest = VERTICES
        .iter()
        .map(|&(label, (x, y))| (label, (e.s_ac - x).hypot(e.s_ad - y)))
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .expect("vertex table is non-empty");
    if nearest.1 <= tol {
        return nearest.0;
    }
    // Segment from SWAP (2, 0) to iSWAP (2, 1).
    let dy = if e.s_ad < 0.0 {
        -e.s_ad
    } else if e.s_ad > 1.0 {
        e.s_ad - 1.0
    } else {
        0.0
    };
    if (e.s_ac - 2.0).hypot(dy) <= tol {
        GateLabel::BoundaryLine
    } else {
        GateLabel::Interior
    }
}

/// Entropy pairs of gates drawn uniformly from the canonical chamber.
pub fn region_scatter(samples: usize, seed: u64) -> Vec<EntropyPair> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..samples)
        .map(|_| {
            let mut c = [0.0; 3].map(|_| rng.random_range(0.0..=FRAC_PI_4));
            c.sort_by(|a, b| b.total_cmp(a));
            let u = cartan_unitary(&CartanCoordinates::from_slice(&c));
            purities(&choi_unchecked(&u)).entropies()
        })
        .collect()
}

/// Area of the convex hull of the points (monotone chain).
pub fn convex_hull_area(points: &[EntropyPair]) -> f64 {
    let mut pts: Vec<(f64, f64)> = points.iter().map(|e| (e.s_ac, e.s_ad)).collect();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    pts.dedup();
    if pts.len() < 3 {
        return 0.0;
    }
    let cross = |o: (f64, f64), a: (f64, f64), b: (f64, f64)| {
        (a.0 - o.0) * (b.1 - o.1) - (a.1 - o.1) * (b.0 - o.0)
    };
    let mut hull: Vec<(f64, f64)> = Vec::with_capacity(2 * pts.len());
    for pass in 0..2 {
        let start = hull.len();
        let iter: Box<dyn Iterator<Item = &(f64, f64)>> =
            if pass == 0 { Box::new(pts.iter()) } else { Box::new(pts.iter().rev()) };
        for &p in iter {
            while hull.len() >= start + 2 && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0.0 {
                hull.pop();
            }
            hull.push(p);
        }
        hull.pop();
    }
    let area: f64 = (0..hull.len())
        .map(|i| {
            let (a, b) = (hull[i], hull[(i + 1) % hull.len()]);
            a.0 * b.1 - b.0 * a.1
        })
        .sum();
    area.abs() / 2.0
}
