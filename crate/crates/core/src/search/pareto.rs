use serde::Serialize;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ParetoPoint<T> {
    pub latency: f64,
    pub score: f64,
    pub payload: T,
}

impl<T> ParetoPoint<T> {
    pub fn new(latency: f64, score: f64, payload: T) -> Self {
        ParetoPoint { latency, score, payload }
    }

    /// Lower-or-equal latency and higher-or-equal score, one of them strict.
    pub fn dominates<U>(&self, other: &ParetoPoint<U>) -> bool {
        self.latency <= other.latency
            && self.score >= other.score
            && (self.latency < other.latency || self.score > other.score)
    }
}

/// Non-dominated subset, ordered by latency (input order among equal
/// latencies). Points with identical coordinates do not dominate each other
/// and are all kept. Points with a NaN coordinate are dropped.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ParetoFront<T> {
    pub points: Vec<ParetoPoint<T>>,
}

impl<T> ParetoFront<T> {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Indices of the non-dominated points, in front order.
pub fn pareto_indices<T>(points: &[ParetoPoint<T>]) -> Vec<usize> {
    let mut order: Vec<usize> =
        (0..points.len()).filter(|&i| !points[i].latency.is_nan() && !points[i].score.is_nan()).collect();
    order.sort_by(|&a, &b| points[a].latency.total_cmp(&points[b].latency).then(a.cmp(&b)));
    let mut keep = Vec::new();
    let mut best = f64::NEG_INFINITY;
    let mut first_group = true;
    let mut i = 0;
    while i < order.len() {
        let lat = points[order[i]].latency;
        let mut j = i;
        while j < order.len() && points[order[j]].latency == lat {
            j += 1;
        }
        let group = &order[i..j];
        let gmax = group.iter().map(|&k| points[k].score).fold(f64::NEG_INFINITY, f64::max);
        if first_group || gmax > best {
            keep.extend(group.iter().copied().filter(|&k| points[k].score == gmax));
            best = best.max(gmax);
        }
        first_group = false;
        i = j;
    }
    keep
}

pub fn pareto_front<T: Clone>(points: &[ParetoPoint<T>]) -> ParetoFront<T> {
    ParetoFront { points: pareto_indices(points).into_iter().map(|i| points[i].clone()).collect() }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pts(v: &[(f64, f64)]) -> Vec<ParetoPoint<usize>> {
        v.iter().enumerate().map(|(i, &(l, s))| ParetoPoint::new(l, s, i)).collect()
    }

    #[test]
    fn small_example() {
        let f = pareto_front(&pts(&[(1.0, 5.0), (2.0, 6.0), (3.0, 4.0)]));
        assert_eq!(f.points.iter().map(|p| p.payload).collect::<Vec<_>>(), vec![0, 1]);
        assert!(pareto_front::<usize>(&[]).is_empty());
    }

    #[test]
    fn duplicates_survive_and_ties_resolve() {
        let f = pareto_front(&pts(&[(2.0, 3.0), (1.0, 1.0), (2.0, 3.0), (2.0, 2.0), (1.0, 1.0)]));
        assert_eq!(f.points.iter().map(|p| p.payload).collect::<Vec<_>>(), vec![1, 4, 0, 2]);
    }

    #[test]
    fn nan_is_dropped() {
        let f = pareto_front(&pts(&[(f64::NAN, 9.0), (1.0, 1.0)]));
        assert_eq!(f.len(), 1);
    }
}
