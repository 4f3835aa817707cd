//! Open-tour ordering of a batch by simulated annealing.

use rand::Rng;

use super::{ProposedBatch, TspConfig};
use crate::benchmarks::CostModel;
use crate::{euclidean, rng, Point};

/// A batch ordered into an open tour that starts at the current input.
#[derive(Clone, Debug, PartialEq)]
pub struct OrderedPath {
    pub points: Vec<Point>,
    /// Positions in the input batch, in visiting order.
    pub order: Vec<usize>,
    /// Movement cost of the tour, starting from the current input.
    pub cost: f64,
}

const END: usize = usize::MAX;

/// Pairwise distances with the depot (current input) stored at index `n`.
struct Distances {
    n: usize,
    d: Vec<f64>,
}

impl Distances {
    fn new(points: &[Point], depot: &[f64], scale: f64) -> Self {
        let n = points.len();
        let node = |i: usize| if i == n { depot } else { points[i].as_slice() };
        let mut d = vec![0.0; (n + 1) * (n + 1)];
        for i in 0..=n {
            for j in 0..i {
                let v = scale * euclidean(node(i), node(j));
                d[i * (n + 1) + j] = v;
                d[j * (n + 1) + i] = v;
            }
        }
        Self { n, d }
    }

    #[inline]
    fn get(&self, a: usize, b: usize) -> f64 {
        if a == END || b == END {
            0.0
        } else {
            self.d[a * (self.n + 1) + b]
        }
    }
}

struct Tour<'a> {
    dist: &'a Distances,
    perm: Vec<usize>,
}

impl Tour<'_> {
    /// Node before position `i` (the depot for `i = 0`).
    #[inline]
    fn prev(&self, i: usize) -> usize {
        if i == 0 {
            self.dist.n
        } else {
            self.perm[i - 1]
        }
    }

    #[inline]
    fn next(&self, i: usize) -> usize {
        self.perm.get(i + 1).copied().unwrap_or(END)
    }

    fn cost(&self) -> f64 {
        (0..self.perm.len())
            .map(|i| self.dist.get(self.prev(i), self.perm[i]))
            .sum()
    }

    /// Change in cost from reversing `perm[i..=j]`, `i < j`.
    fn two_opt_delta(&self, i: usize, j: usize) -> f64 {
        let (a, b, c, e) = (self.prev(i), self.perm[i], self.perm[j], self.next(j));
        let d = |x, y| self.dist.get(x, y);
        d(a, c) + d(b, e) - d(a, b) - d(c, e)
    }

    fn two_opt(&mut self, i: usize, j: usize) {
        self.perm[i..=j].reverse();
    }

    /// Change in cost from moving the element at `i` so it ends up at `j`.
    fn relocate_delta(&self, i: usize, j: usize) -> f64 {
        let d = |x, y| self.dist.get(x, y);
        let p = self.perm[i];
        let (a, b) = (self.prev(i), self.next(i));
        let removal = d(a, b) - d(a, p) - d(p, b);
        let (u, v) = if i < j {
            (self.perm[j], self.next(j))
        } else {
            (self.prev(j), self.perm[j])
        };
        removal + d(u, p) + d(p, v) - d(u, v)
    }

    fn relocate(&mut self, i: usize, j: usize) {
        let p = self.perm.remove(i);
        self.perm.insert(j, p);
    }

    /// First-improvement 2-opt and relocation until neither helps.
    fn polish(&mut self) {
        let n = self.perm.len();
        for _ in 0..100 {
            let mut improved = false;
            for i in 0..n {
                for j in i + 1..n {
                    if self.two_opt_delta(i, j) < -1e-12 {
                        self.two_opt(i, j);
                        improved = true;
                    }
                }
            }
            for i in 0..n {
                for j in 0..n {
                    if i != j && self.relocate_delta(i, j) < -1e-12 {
                        self.relocate(i, j);
                        improved = true;
                    }
                }
            }
            if !improved {
                break;
            }
        }
    }
}

fn nearest_neighbour(dist: &Distances) -> Vec<usize> {
    let n = dist.n;
    let mut used = vec![false; n];
    let mut at = n;
    let mut perm = Vec::with_capacity(n);
    for _ in 0..n {
        let mut best = None;
        for j in 0..n {
            if !used[j] && best.is_none_or(|(_, bd)| dist.get(at, j) < bd) {
                best = Some((j, dist.get(at, j)));
            }
        }
        let (j, _) = best.expect("unvisited node remains");
        used[j] = true;
        perm.push(j);
        at = j;
    }
    perm
}

/// Movement cost of visiting `points` in order, starting from `current`.
pub fn path_cost(current: &[f64], points: &[Point], cm: &CostModel) -> f64 {
    let mut at = current;
    let mut total = 0.0;
    for p in points {
        total += cm.movement_cost(at, p);
        at = p;
    }
    total
}

/// Orders `points` into an open tour from `current` minimizing total
/// movement cost. Starts from the better of the given order and the
/// nearest-neighbour tour, anneals, then polishes to a 2-opt/relocation local
/// optimum, so the result is never worse than either starting tour.
pub fn order_points(
    points: &[Point],
    current: &[f64],
    cm: &CostModel,
    cfg: &TspConfig,
) -> OrderedPath {
    let n = points.len();
    if n == 0 {
        return OrderedPath {
            points: Vec::new(),
            order: Vec::new(),
            cost: 0.0,
        };
    }
    // A zero movement scale would make every tour free; order by distance anyway.
    let scale = if cm.movement_scale > 0.0 {
        cm.movement_scale
    } else {
        1.0
    };
    let dist = Distances::new(points, current, scale);

    let identity = Tour {
        dist: &dist,
        perm: (0..n).collect(),
    };
    let greedy = Tour {
        dist: &dist,
        perm: nearest_neighbour(&dist),
    };
    let mut tour = if greedy.cost() < identity.cost() {
        greedy
    } else {
        identity
    };

    if n >= 3 {
        let mut best_perm = tour.perm.clone();
        let mut cost = tour.cost();
        let mut best_cost = cost;
        let pairs = ((n + 1) * n / 2) as f64;
        let t0 = (0..=n)
            .flat_map(|i| (0..i).map(move |j| (i, j)))
            .map(|(i, j)| dist.get(i, j))
            .sum::<f64>()
            / pairs;
        let iters = cfg.proposals(n);
        let mut r = rng::rng_from_seed(rng::derive_seed(cfg.seed, n as u64));
        let cooling = cfg.final_temperature_ratio.powf(1.0 / iters.max(1) as f64);
        let mut temp = t0;
        for _ in 0..iters {
            let i = r.random_range(0..n);
            let mut j = r.random_range(0..n - 1);
            if j >= i {
                j += 1;
            }
            let two_opt = r.random::<bool>();
            let delta = if two_opt {
                tour.two_opt_delta(i.min(j), i.max(j))
            } else {
                tour.relocate_delta(i, j)
            };
            if delta <= 0.0 || (temp > 0.0 && r.random::<f64>() < (-delta / temp).exp()) {
                if two_opt {
                    tour.two_opt(i.min(j), i.max(j));
                } else {
                    tour.relocate(i, j);
                }
                cost += delta;
                if cost < best_cost - 1e-12 {
                    best_cost = cost;
                    best_perm.clone_from(&tour.perm);
                }
            }
            temp *= cooling;
        }
        tour.perm = best_perm;
    }
    tour.polish();

    let order = tour.perm;
    let points: Vec<Point> = order.iter().map(|&i| points[i].clone()).collect();
    let cost = path_cost(current, &points, cm);
    OrderedPath {
        points,
        order,
        cost,
    }
}

pub fn order_batch(
    batch: &ProposedBatch,
    current: &[f64],
    cm: &CostModel,
    cfg: &TspConfig,
) -> OrderedPath {
    order_points(&batch.points, current, cm, cfg)
}
