//! Distances between traffic states.
//!
//! Microscopic states are compared vehicle by vehicle (`dftl_*`) or as
//! Dirac measures under optimal transport (`w_micro_*`); macroscopic states
//! through the Wasserstein distance of their density measures (`dlwr_*`).

use crate::geometry::{NetworkPoint, RoadNetwork};
use crate::lwr::NetworkGrid;
use crate::micro::{Geometry, MicroNetworkState};
use crate::scale::{density_measure_line, density_measure_network, dirac_measure, PiecewiseDensity};
use crate::transport::{solve, TransportProblem};
use crate::{Error, Result};

const MASS_TOL: f64 = 1e-9;

/// Finitely many weighted atoms on a common support space.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteMeasure<L> {
    atoms: Vec<(L, f64)>,
}

impl<L> DiscreteMeasure<L> {
    pub fn new(atoms: Vec<(L, f64)>) -> Self {
        debug_assert!(atoms.iter().all(|a| a.1 >= 0.0));
        Self { atoms }
    }

    pub fn atoms(&self) -> &[(L, f64)] {
        &self.atoms
    }

    pub fn total(&self) -> f64 {
        self.atoms.iter().map(|a| a.1).sum()
    }
}

/// A distance plus the error its atomization may have introduced.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DistanceReport {
    pub value: f64,
    pub error_bound: f64,
}

fn check_masses(a: f64, b: f64) -> Result<()> {
    if (a - b).abs() > MASS_TOL * a.abs().max(b.abs()) {
        Err(Error::MassMismatch(a, b))
    } else {
        Ok(())
    }
}

fn check_p(p: f64) -> Result<()> {
    if p >= 1.0 && p.is_finite() {
        Ok(())
    } else {
        Err(Error::Precondition(format!("exponent p must be >= 1, got {p}")))
    }
}

/// W1 between two densities on the line as the exact integral of `|F_a - F_b|`.
pub fn w1_line_cdf(a: &PiecewiseDensity, b: &PiecewiseDensity) -> Result<f64> {
    check_masses(a.mass(), b.mass())?;
    let mut xs: Vec<f64> = a.breaks().iter().chain(b.breaks()).copied().collect();
    xs.sort_by(f64::total_cmp);
    xs.dedup();
    let (mut fa, mut fb) = (0.0, 0.0);
    let mut total = 0.0;
    for w in xs.windows(2) {
        let h = w[1] - w[0];
        let mid = 0.5 * (w[0] + w[1]);
        let d0 = fa - fb;
        fa += a.value_at(mid) * h;
        fb += b.value_at(mid) * h;
        let d1 = fa - fb;
        total += if d0 * d1 >= 0.0 {
            0.5 * (d0 + d1).abs() * h
        } else {
            // The difference is linear on the piece and crosses zero once.
            0.5 * (d0 * d0 + d1 * d1) / (d0 - d1).abs() * h
        };
    }
    Ok(total)
}

/// W_p between measures on the line by monotone rearrangement: both atom
/// lists are sorted and mass is matched left to right.
pub fn wp_line_rearrangement(a: &DiscreteMeasure<f64>, b: &DiscreteMeasure<f64>, p: f64) -> Result<f64> {
    check_p(p)?;
    check_masses(a.total(), b.total())?;
    let sorted = |m: &DiscreteMeasure<f64>| {
        let mut v: Vec<(f64, f64)> = m.atoms.iter().copied().filter(|x| x.1 > 0.0).collect();
        v.sort_by(|x, y| x.0.total_cmp(&y.0));
        v
    };
    let (xa, xb) = (sorted(a), sorted(b));
    let (mut i, mut j) = (0, 0);
    let (mut ra, mut rb) = (xa.first().map_or(0.0, |x| x.1), xb.first().map_or(0.0, |x| x.1));
    let mut cost = 0.0;
    while i < xa.len() && j < xb.len() {
        let m = ra.min(rb);
        cost += m * (xa[i].0 - xb[j].0).abs().powf(p);
        ra -= m;
        rb -= m;
        if ra <= 0.0 {
            i += 1;
            ra = xa.get(i).map_or(0.0, |x| x.1);
        }
        if rb <= 0.0 {
            j += 1;
            rb = xb.get(j).map_or(0.0, |x| x.1);
        }
    }
    Ok(cost.powf(1.0 / p))
}

/// W_p between measures on a network, solved as a transportation problem
/// with costs `D_N^p`.
pub fn wp_network(
    a: &DiscreteMeasure<NetworkPoint>,
    b: &DiscreteMeasure<NetworkPoint>,
    net: &RoadNetwork,
    p: f64,
) -> Result<f64> {
    check_p(p)?;
    check_masses(a.total(), b.total())?;
    let supplies = a.atoms.iter().map(|x| x.1).collect();
    let demands = b.atoms.iter().map(|x| x.1).collect();
    let mut disconnected = false;
    let problem = TransportProblem::from_fn(supplies, demands, |i, j| {
        let d = net.distance_unchecked(&a.atoms[i].0, &b.atoms[j].0);
        if !d.is_finite() {
            disconnected = true;
            return 0.0;
        }
        if p == 1.0 {
            d
        } else {
            d.powf(p)
        }
    })?;
    if disconnected {
        return Err(Error::Disconnected);
    }
    Ok(solve(&problem)?.objective.powf(1.0 / p))
}

/// Vehicle-by-vehicle distance `(ell_n sum |y_a[i] - y_b[i]|^p)^(1/p)` on one road.
pub fn dftl_road(ya: &[f64], yb: &[f64], ell: f64, p: f64) -> Result<f64> {
    check_p(p)?;
    if ya.len() != yb.len() {
        return Err(Error::Precondition(format!(
            "vehicle counts differ: {} vs {}",
            ya.len(),
            yb.len()
        )));
    }
    let sum: f64 = ya.iter().zip(yb).map(|(a, b)| (a - b).abs().powf(p)).sum();
    Ok((ell * sum).powf(1.0 / p))
}

/// Vehicle-by-vehicle distance on a network, pairing each labeled vehicle with itself.
pub fn dftl_network(
    a: &MicroNetworkState,
    b: &MicroNetworkState,
    geo: &Geometry,
    p: f64,
) -> Result<f64> {
    check_p(p)?;
    let profile = |s: &MicroNetworkState| s.populations.iter().map(Vec::len).collect::<Vec<_>>();
    if profile(a) != profile(b) {
        return Err(Error::Precondition(format!(
            "population sizes differ: {:?} vs {:?}",
            profile(a),
            profile(b)
        )));
    }
    let (pa, pb) = (a.points(geo), b.points(geo));
    let mut sum = 0.0;
    for (xs, ys) in pa.iter().zip(&pb) {
        for (x, y) in xs.iter().zip(ys) {
            sum += geo.net.distance(x, y)?.powf(p);
        }
    }
    Ok((a.params.ell_n * sum).powf(1.0 / p))
}

/// W_p between the Dirac measures of two vehicle vectors on one road.
pub fn w_micro_road(ya: &[f64], yb: &[f64], ell: f64, p: f64) -> Result<f64> {
    if ya.len() != yb.len() {
        return Err(Error::Precondition(format!(
            "vehicle counts differ: {} vs {}",
            ya.len(),
            yb.len()
        )));
    }
    wp_line_rearrangement(&dirac_measure(ya, ell), &dirac_measure(yb, ell), p)
}

/// W_p between the Dirac measures of two network states, ignoring labels.
pub fn w_micro_network(
    a: &MicroNetworkState,
    b: &MicroNetworkState,
    geo: &Geometry,
    p: f64,
) -> Result<f64> {
    if a.vehicle_count() != b.vehicle_count() {
        return Err(Error::Precondition(format!(
            "vehicle counts differ: {} vs {}",
            a.vehicle_count(),
            b.vehicle_count()
        )));
    }
    let flat = |s: &MicroNetworkState| -> Vec<NetworkPoint> { s.points(geo).into_iter().flatten().collect() };
    let ell = a.params.ell_n;
    wp_network(
        &dirac_measure(&flat(a), ell),
        &dirac_measure(&flat(b), ell),
        &geo.net,
        p,
    )
}

/// Wasserstein distance between two road densities. `p = 1` integrates the
/// CDFs exactly; other exponents rearrange the cell-midpoint atoms.
pub fn dlwr_road(
    a: &PiecewiseDensity,
    b: &PiecewiseDensity,
    p: f64,
    coarsen_to: usize,
) -> Result<DistanceReport> {
    check_p(p)?;
    if p == 1.0 {
        return Ok(DistanceReport {
            value: w1_line_cdf(a, b)?,
            error_bound: 0.0,
        });
    }
    let (ma, mb) = (density_measure_line(a, coarsen_to), density_measure_line(b, coarsen_to));
    Ok(DistanceReport {
        value: wp_line_rearrangement(&ma.measure, &mb.measure, p)?,
        error_bound: ma.error_bound + mb.error_bound,
    })
}

/// Wasserstein distance between the total densities of two network grids.
pub fn dlwr_network(
    a: &NetworkGrid,
    b: &NetworkGrid,
    net: &RoadNetwork,
    p: f64,
    coarsen_to: usize,
) -> Result<DistanceReport> {
    let ma = density_measure_network(a, net, coarsen_to);
    let mb = density_measure_network(b, net, coarsen_to);
    Ok(DistanceReport {
        value: wp_network(&ma.measure, &mb.measure, net, p)?,
        error_bound: ma.error_bound + mb.error_bound,
    })
}
