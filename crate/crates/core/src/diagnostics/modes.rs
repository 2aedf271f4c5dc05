use alloc::vec::Vec;

use crate::math::squared_distance;
use crate::model::ParameterVector;

fn count_within(samples: &[ParameterVector], centre: &[f64], radius: f64) -> usize {
    let r2 = radius * radius;
    samples.iter().filter(|s| squared_distance(s, centre) <= r2).count()
}

/// Ratio of sample counts inside the radius-balls around `a` and `b`;
/// `+∞` when the ball around `b` is empty.
pub fn mode_ratio(samples: &[ParameterVector], a: &[f64], b: &[f64], radius: f64) -> f64 {
    let na = count_within(samples, a, radius);
    let nb = count_within(samples, b, radius);
    if nb == 0 {
        return f64::INFINITY;
    }
    na as f64 / nb as f64
}

#[derive(Clone, Debug, PartialEq)]
pub struct Occupancy {
    pub fractions: Vec<f64>,
    /// Fraction farther than the assignment radius from every mode.
    pub unassigned: f64,
}

/// Assigns each sample to its nearest mode, or to no mode when `radius` is
/// given and the nearest one is farther away.
pub fn mode_occupancy(samples: &[ParameterVector], modes: &[ParameterVector], radius: Option<f64>) -> Occupancy {
    assert!(!modes.is_empty(), "need at least one mode");
    let mut counts = alloc::vec![0usize; modes.len()];
    let mut unassigned = 0usize;
    for s in samples {
        let (best, d2) = modes
            .iter()
            .enumerate()
            .map(|(j, m)| (j, squared_distance(s, m)))
            .fold((0, f64::INFINITY), |acc, x| if x.1 < acc.1 { x } else { acc });
        match radius {
            Some(r) if d2 > r * r => unassigned += 1,
            _ => counts[best] += 1,
        }
    }
    let total = samples.len().max(1) as f64;
    Occupancy {
        fractions: counts.iter().map(|&c| c as f64 / total).collect(),
        unassigned: unassigned as f64 / total,
    }
}

/// First index of `trace` (index 0 being the initial state) inside the ball.
pub fn hitting_time<T: AsRef<[f64]>>(trace: &[T], mode: &[f64], radius: f64) -> Option<usize> {
    let r2 = radius * radius;
    trace.iter().position(|s| squared_distance(s.as_ref(), mode) <= r2)
}

/// Neighbourhood radius scaled with the posterior width: `r·√(n_ref/n)`.
pub fn scaled_radius(reference_radius: f64, reference_n: f64, n: f64) -> f64 {
    reference_radius * crate::math::sqrt(reference_n / n)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn pts(xs: &[(f64, f64)]) -> Vec<ParameterVector> {
        xs.iter().map(|&(a, b)| ParameterVector::new(vec![a, b]).unwrap()).collect()
    }

    #[test]
    fn ratio_fixture() {
        let mut xs = vec![(0.0, 1.0); 30];
        xs.extend(vec![(1.0, -1.0); 10]);
        xs.push((5.0, 5.0));
        let s = pts(&xs);
        assert_eq!(mode_ratio(&s, &[0.0, 1.0], &[1.0, -1.0], 0.01), 3.0);
        assert_eq!(mode_ratio(&s, &[0.0, 1.0], &[0.0, 1.0], 0.01), 1.0);
        assert_eq!(mode_ratio(&s, &[0.0, 1.0], &[9.0, 9.0], 0.01), f64::INFINITY);
        let r = mode_ratio(&s, &[0.0, 1.0], &[1.0, -1.0], 0.01) * mode_ratio(&s, &[1.0, -1.0], &[0.0, 1.0], 0.01);
        assert_eq!(r, 1.0);
    }

    #[test]
    fn occupancy_fixtures() {
        let modes = pts(&[(0.0, 0.0), (3.0, 0.0), (0.0, 3.0)]);
        let all_first = pts(&[(0.1, 0.0); 5]);
        assert_eq!(mode_occupancy(&all_first, &modes, None).fractions, [1.0, 0.0, 0.0]);
        let even = pts(&[(0.0, 0.1), (2.9, 0.0), (0.0, 3.2), (0.2, 0.0), (3.0, 0.3), (0.1, 2.9)]);
        let occ = mode_occupancy(&even, &modes, None);
        for f in &occ.fractions {
            assert!((f - 1.0 / 3.0).abs() < 1e-15);
        }
        assert_eq!(occ.fractions.iter().sum::<f64>(), 1.0);
        let occ = mode_occupancy(&pts(&[(0.0, 0.0), (10.0, 10.0)]), &modes, Some(1.0));
        assert_eq!(occ.fractions, [0.5, 0.0, 0.0]);
        assert_eq!(occ.unassigned, 0.5);
    }

    #[test]
    fn hitting_fixtures() {
        let mut trace = vec![[5.0, 5.0]; 7];
        trace.push([0.0, 0.0]);
        assert_eq!(hitting_time(&trace, &[0.0, 0.0], 0.1), Some(7));
        assert_eq!(hitting_time(&trace, &[5.0, 5.0], 0.1), Some(0));
        assert_eq!(hitting_time(&trace, &[1.0, 1.0], 0.1), None);
        assert!((scaled_radius(0.01, 1e6, 1e4) - 0.1).abs() < 1e-15);
    }
}
