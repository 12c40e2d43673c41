//! Operators between the microscopic and macroscopic scales.
//!
//! `discretize` places `n` vehicles so that consecutive vehicles enclose equal
//! mass `ell_n = M / (n - 1)`; `antidiscretize` turns a position vector back
//! into a piecewise-constant density. The measure constructors build the
//! discrete measures compared by the Wasserstein distances.

use crate::geometry::{NetworkPoint, RoadNetwork};
use crate::lwr::NetworkGrid;
use crate::metrics::DiscreteMeasure;
use crate::{Error, Result};

/// Slack allowed on density values and vehicle gaps for floating-point noise.
pub const TOL_OVERLAP: f64 = 1e-9;

/// Piecewise-constant density with compact support.
///
/// `breaks` has one more entry than `values`; the density is `values[k]` on
/// `[breaks[k], breaks[k+1])` and zero outside `[breaks[0], breaks[last]]`.
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewiseDensity {
    breaks: Vec<f64>,
    values: Vec<f64>,
}

impl PiecewiseDensity {
    pub fn new(breaks: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            if breaks.len() > 1 {
                return Err(Error::Precondition("breakpoints without values".into()));
            }
            return Ok(Self::zero());
        }
        if breaks.len() != values.len() + 1 {
            return Err(Error::Precondition(format!(
                "{} breakpoints for {} values",
                breaks.len(),
                values.len()
            )));
        }
        if breaks.iter().any(|b| !b.is_finite()) || breaks.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::Precondition("breakpoints must be finite and strictly increasing".into()));
        }
        if let Some(v) = values.iter().find(|v| !(**v >= 0.0 && **v <= 1.0 + TOL_OVERLAP)) {
            return Err(Error::Precondition(format!("density value {v} outside [0, 1]")));
        }
        Ok(Self { breaks, values })
    }

    pub fn zero() -> Self {
        Self {
            breaks: Vec::new(),
            values: Vec::new(),
        }
    }

    /// Density `value` on `[lo, hi)`.
    pub fn indicator(lo: f64, hi: f64, value: f64) -> Result<Self> {
        Self::new(vec![lo, hi], vec![value])
    }

    /// Builds a density from disjoint `(lo, hi, value)` pieces; gaps are zero.
    pub fn from_pieces(pieces: &[(f64, f64, f64)]) -> Result<Self> {
        let mut pieces: Vec<_> = pieces.iter().copied().filter(|p| p.1 > p.0).collect();
        pieces.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut breaks = Vec::new();
        let mut values = Vec::new();
        for (lo, hi, v) in pieces {
            match breaks.last() {
                Some(&last) if lo < last => {
                    return Err(Error::Precondition(format!(
                        "density pieces overlap at {lo}"
                    )))
                }
                Some(&last) if lo > last => {
                    values.push(0.0);
                    breaks.push(lo);
                }
                Some(_) => {}
                None => breaks.push(lo),
            }
            values.push(v);
            breaks.push(hi);
        }
        Self::new(breaks, values)
    }

    pub fn breaks(&self) -> &[f64] {
        &self.breaks
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn pieces(&self) -> impl Iterator<Item = (f64, f64, f64)> + '_ {
        self.values
            .iter()
            .enumerate()
            .map(move |(k, &v)| (self.breaks[k], self.breaks[k + 1], v))
    }

    pub fn mass(&self) -> f64 {
        self.pieces().map(|(lo, hi, v)| v * (hi - lo)).sum()
    }

    /// Smallest closed interval outside which the density vanishes.
    pub fn support(&self) -> Option<(f64, f64)> {
        let first = self.values.iter().position(|&v| v > 0.0)?;
        let last = self.values.iter().rposition(|&v| v > 0.0)?;
        Some((self.breaks[first], self.breaks[last + 1]))
    }

    pub fn value_at(&self, x: f64) -> f64 {
        if self.values.is_empty() || x < self.breaks[0] || x >= *self.breaks.last().unwrap() {
            return 0.0;
        }
        let k = self.breaks.partition_point(|&b| b <= x) - 1;
        self.values[k]
    }

    /// Exact integral of the density over `[lo, hi]`.
    pub fn integral(&self, lo: f64, hi: f64) -> f64 {
        self.pieces()
            .map(|(a, b, v)| {
                let w = b.min(hi) - a.max(lo);
                if w > 0.0 {
                    v * w
                } else {
                    0.0
                }
            })
            .sum()
    }

    pub fn shifted(&self, by: f64) -> Self {
        Self {
            breaks: self.breaks.iter().map(|b| b + by).collect(),
            values: self.values.clone(),
        }
    }
}

/// Vehicle length that keeps the total mass `m` fixed for `n` vehicles.
pub fn ell_n(m: f64, n: usize) -> Result<f64> {
    if n < 2 {
        return Err(Error::Precondition(format!("need at least 2 vehicles, got {n}")));
    }
    if !(m > 0.0) || !m.is_finite() {
        return Err(Error::Precondition(format!("total mass must be positive, got {m}")));
    }
    Ok(m / (n - 1) as f64)
}

/// Places `n` vehicles on `r`: the leader sits at the right end of the
/// support, and each follower is the rightmost point leaving mass `ell_n`
/// between itself and the vehicle ahead.
///
/// Requires the density to be positive throughout the interior of its support.
pub fn discretize(r: &PiecewiseDensity, n: usize) -> Result<Vec<f64>> {
    let m = r.mass();
    let ell = ell_n(m, n)?;
    let (first, last) = match (
        r.values.iter().position(|&v| v > 0.0),
        r.values.iter().rposition(|&v| v > 0.0),
    ) {
        (Some(f), Some(l)) => (f, l),
        _ => return Err(Error::Precondition("density has no mass".into())),
    };
    if let Some(k) = (first..=last).find(|&k| r.values[k] <= 0.0) {
        return Err(Error::Precondition(format!(
            "density vanishes on [{}, {}) inside its support; equal-mass anchors unreachable",
            r.breaks[k],
            r.breaks[k + 1]
        )));
    }

    let mut y = vec![0.0; n];
    y[n - 1] = r.breaks[last + 1];
    // Sweep pieces right to left; `acc` is the mass right of piece `k`.
    let mut k = last;
    let mut acc = 0.0;
    for i in (0..n - 1).rev() {
        let target = (n - 1 - i) as f64 * ell;
        loop {
            let (lo, hi, v) = (r.breaks[k], r.breaks[k + 1], r.values[k]);
            let piece = v * (hi - lo);
            if target <= acc + piece {
                y[i] = (hi - (target - acc) / v).max(lo);
                break;
            }
            if k == first {
                // Rounding left the final slab marginally short of ell_n.
                y[i] = lo;
                break;
            }
            acc += piece;
            k -= 1;
        }
    }
    Ok(y)
}

/// Piecewise-constant density `ell / (y[i+1] - y[i])` between consecutive vehicles.
pub fn antidiscretize(y: &[f64], ell: f64) -> Result<PiecewiseDensity> {
    if y.len() < 2 {
        return Ok(PiecewiseDensity::zero());
    }
    let mut values = Vec::with_capacity(y.len() - 1);
    for (i, w) in y.windows(2).enumerate() {
        let gap = w[1] - w[0];
        if gap < ell - TOL_OVERLAP || gap <= 0.0 {
            return Err(Error::Precondition(format!(
                "vehicles {i} and {} overlap: gap {gap} < ell_n {ell}",
                i + 1
            )));
        }
        values.push((ell / gap).min(1.0 + TOL_OVERLAP));
    }
    PiecewiseDensity::new(y.to_vec(), values)
}

/// L1 distance between two piecewise-constant densities, integrated exactly.
pub fn l1_distance(a: &PiecewiseDensity, b: &PiecewiseDensity) -> f64 {
    let mut xs: Vec<f64> = a.breaks.iter().chain(&b.breaks).copied().collect();
    xs.sort_by(f64::total_cmp);
    xs.dedup();
    xs.windows(2)
        .map(|w| {
            let mid = 0.5 * (w[0] + w[1]);
            (a.value_at(mid) - b.value_at(mid)).abs() * (w[1] - w[0])
        })
        .sum()
}

/// Dirac measure with mass `ell` at every position.
pub fn dirac_measure<L: Copy>(positions: &[L], ell: f64) -> DiscreteMeasure<L> {
    DiscreteMeasure::new(positions.iter().map(|&p| (p, ell)).collect())
}

/// A measure together with the transport cost its atomization may have
/// introduced (mass times spread of every merged group).
#[derive(Debug, Clone)]
pub struct Atomized<L> {
    pub measure: DiscreteMeasure<L>,
    pub error_bound: f64,
}

/// One atom per interval of `r`, at its midpoint, carrying the interval's mass.
pub fn density_measure_line(r: &PiecewiseDensity, coarsen_to: usize) -> Atomized<f64> {
    let atoms: Vec<(f64, f64)> = r
        .pieces()
        .filter(|p| p.2 > 0.0)
        .map(|(lo, hi, v)| (0.5 * (lo + hi), v * (hi - lo)))
        .collect();
    let (atoms, error_bound) = coarsen(vec![atoms], coarsen_to);
    Atomized {
        measure: DiscreteMeasure::new(atoms.into_iter().flatten().collect()),
        error_bound,
    }
}

/// One atom per physical cell of the network grid, at the cell midpoint,
/// carrying the total density (all paths) times the cell width.
pub fn density_measure_network(
    grid: &NetworkGrid,
    net: &RoadNetwork,
    coarsen_to: usize,
) -> Atomized<NetworkPoint> {
    let totals = grid.slot_totals();
    let dx = grid.dx();
    let mut groups: Vec<Vec<(f64, f64)>> = vec![Vec::new(); net.arcs().len()];
    for (slot, &rho) in totals.iter().enumerate() {
        if rho > 0.0 {
            let (arc, cell) = grid.slot_location(slot);
            groups[arc].push(((cell as f64 + 0.5) * dx, rho * dx));
        }
    }
    let (groups, error_bound) = coarsen(groups, coarsen_to);
    let mut atoms = Vec::new();
    for (arc, group) in groups.into_iter().enumerate() {
        let len = net.arc(arc).length;
        for (x, m) in group {
            let p = if x > len {
                NetworkPoint {
                    arc,
                    offset: len,
                    extension: x - len,
                }
            } else {
                NetworkPoint::on_arc(arc, x)
            };
            atoms.push((p, m));
        }
    }
    Atomized {
        measure: DiscreteMeasure::new(atoms),
        error_bound,
    }
}

/// Merges runs of adjacent atoms within each group until the total atom count
/// is within `budget`. Atoms inside a group must be sorted by position.
fn coarsen(groups: Vec<Vec<(f64, f64)>>, budget: usize) -> (Vec<Vec<(f64, f64)>>, f64) {
    let count: usize = groups.iter().map(Vec::len).sum();
    if count <= budget.max(1) {
        return (groups, 0.0);
    }
    let largest = groups.iter().map(Vec::len).max().unwrap_or(1);
    let merged_count = |k: usize| groups.iter().map(|g| g.len().div_ceil(k)).sum::<usize>();
    let mut k = count.div_ceil(budget.max(1)).max(2);
    while k < largest && merged_count(k) > budget {
        k += 1;
    }
    let mut bound = 0.0;
    let out = groups
        .into_iter()
        .map(|g| {
            g.chunks(k)
                .map(|chunk| {
                    let mass: f64 = chunk.iter().map(|a| a.1).sum();
                    let lo = chunk[0].0;
                    let hi = chunk[chunk.len() - 1].0;
                    let pos = if mass > 0.0 {
                        (chunk.iter().map(|a| a.0 * a.1).sum::<f64>() / mass).clamp(lo, hi)
                    } else {
                        0.5 * (lo + hi)
                    };
                    bound += mass * (hi - lo);
                    (pos, mass)
                })
                .collect()
        })
        .collect();
    (out, bound)
}
