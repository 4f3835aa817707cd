//! Front-distance metrics in raw objective units.

use super::ParetoFront;
use crate::{euclidean, Error, Result};

fn nearest_distances(from: &ParetoFront, to: &ParetoFront) -> Result<Vec<f64>> {
    if from.is_empty() || to.is_empty() {
        return Err(Error::EmptyFront);
    }
    Ok(from
        .objectives()
        .map(|p| {
            to.objectives()
                .map(|q| euclidean(p, q))
                .fold(f64::INFINITY, f64::min)
        })
        .collect())
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Generational distance: mean over `approx` of the distance to the nearest `truth` point.
pub fn gd(approx: &ParetoFront, truth: &ParetoFront) -> Result<f64> {
    Ok(mean(&nearest_distances(approx, truth)?))
}

/// Inverted generational distance: mean over `truth` of the distance to the nearest `approx` point.
pub fn igd(approx: &ParetoFront, truth: &ParetoFront) -> Result<f64> {
    Ok(mean(&nearest_distances(truth, approx)?))
}

/// Maximum Pareto-front error: largest distance from an `approx` point to `truth`.
pub fn mpfe(approx: &ParetoFront, truth: &ParetoFront) -> Result<f64> {
    Ok(nearest_distances(approx, truth)?
        .into_iter()
        .fold(f64::NEG_INFINITY, f64::max))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn front(v: &[[f64; 2]]) -> ParetoFront {
        ParetoFront::from_objectives(v.iter().map(|p| p.to_vec()).collect())
    }

    #[test]
    fn hand_checked_values() {
        let a = front(&[[0.0, 0.0]]);
        let t = front(&[[1.0, 0.0]]);
        assert_eq!(
            (
                gd(&a, &t).unwrap(),
                igd(&a, &t).unwrap(),
                mpfe(&a, &t).unwrap()
            ),
            (1.0, 1.0, 1.0)
        );
        let a = front(&[[0.0, 0.0], [3.0, 4.0]]);
        let t = front(&[[0.0, 0.0]]);
        assert_eq!(gd(&a, &t).unwrap(), 2.5);
        assert_eq!(igd(&a, &t).unwrap(), 0.0);
        assert_eq!(mpfe(&a, &t).unwrap(), 5.0);
    }

    #[test]
    fn empty_fronts_are_errors() {
        let t = front(&[[1.0, 0.0]]);
        assert!(matches!(
            gd(&ParetoFront::default(), &t),
            Err(Error::EmptyFront)
        ));
        assert!(matches!(
            igd(&t, &ParetoFront::default()),
            Err(Error::EmptyFront)
        ));
    }

    fn pts() -> impl Strategy<Value = Vec<[f64; 2]>> {
        proptest::collection::vec([-5.0f64..5.0, -5.0f64..5.0], 1..20)
    }

    proptest! {
        #[test]
        fn mpfe_at_least_gd(a in pts(), t in pts()) {
            let (a, t) = (front(&a), front(&t));
            prop_assert!(mpfe(&a, &t).unwrap() >= gd(&a, &t).unwrap() - 1e-12);
        }

        #[test]
        fn self_distance_is_zero(a in pts()) {
            let f = front(&a);
            prop_assert_eq!(gd(&f, &f).unwrap(), 0.0);
            prop_assert_eq!(igd(&f, &f).unwrap(), 0.0);
            prop_assert_eq!(mpfe(&f, &f).unwrap(), 0.0);
        }

        #[test]
        fn adding_a_truth_point_never_raises_igd(a in pts(), t in pts(), pick in 0usize..100) {
            let truth = front(&t);
            let before = igd(&front(&a), &truth).unwrap();
            let mut bigger = a.clone();
            bigger.push(t[pick % t.len()]);
            prop_assert!(igd(&front(&bigger), &truth).unwrap() <= before + 1e-12);
        }
    }
}
