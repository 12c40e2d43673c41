//! Matched micro/macro experiments and the convergence diagnostic
//! `xi_p(n) = |D^FtL_p - D^LWR_p|`.

use std::io::Write;
use std::path::Path as FsPath;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::geometry::{merge_spec, ArcSpec, RoadNetwork};
use crate::lwr::{cells_in, NetworkGrid, RoadGrid, DEFAULT_DX};
use crate::metrics::{
    dftl_network, dftl_road, dlwr_network, dlwr_road, w_micro_network, DistanceReport,
};
use crate::micro::{default_dt, Geometry, MicroNetworkState, MicroParams, MicroRoadState};
use crate::scale::{discretize, ell_n, PiecewiseDensity};
use crate::{Error, Result};

pub const DEFAULT_N_LIST: [usize; 5] = [25, 50, 100, 200, 400];
pub const DEFAULT_COARSEN: usize = 2000;
const MASS_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Space {
    Interval { a: f64, b: f64 },
    Network { arcs: Vec<ArcSpec> },
}

/// Constant density `value` on `[lo, hi] + shift_in_ell_n * ell_n` along `path`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DensityPiece {
    #[serde(default)]
    pub path: usize,
    pub lo: f64,
    pub hi: f64,
    pub value: f64,
    #[serde(default)]
    pub shift_in_ell_n: f64,
}

impl DensityPiece {
    pub fn new(path: usize, lo: f64, hi: f64, value: f64) -> Self {
        Self {
            path,
            lo,
            hi,
            value,
            shift_in_ell_n: 0.0,
        }
    }

    pub fn shifted(mut self, shift_in_ell_n: f64) -> Self {
        self.shift_in_ell_n = shift_in_ell_n;
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSpec {
    pub v_max: f64,
    pub density: Vec<DensityPiece>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Runs {
    pub flat: RunSpec,
    pub sharp: RunSpec,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Boundary {
    #[default]
    DirichletZero,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Run {
    Flat,
    Sharp,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    #[serde(default)]
    pub id: String,
    pub space: Space,
    pub runs: Runs,
    pub t_f: f64,
    pub p: f64,
    pub n_list: Vec<usize>,
    pub dx: f64,
    #[serde(default = "default_coarsen")]
    pub coarsen_to: usize,
    #[serde(default)]
    pub boundary: Boundary,
}

fn default_coarsen() -> usize {
    DEFAULT_COARSEN
}

/// The four reference experiments: two on a road, two on a merge.
pub fn builtin_test(k: usize) -> Result<Scenario> {
    let road = Space::Interval { a: 0.0, b: 100.0 };
    let base = |id: &str, space: Space, flat: RunSpec, sharp: RunSpec, t_f: f64| Scenario {
        id: id.to_owned(),
        space,
        runs: Runs { flat, sharp },
        t_f,
        p: 1.0,
        n_list: DEFAULT_N_LIST.to_vec(),
        dx: DEFAULT_DX,
        coarsen_to: DEFAULT_COARSEN,
        boundary: Boundary::DirichletZero,
    };
    let run = |v_max: f64, density: Vec<DensityPiece>| RunSpec { v_max, density };
    let s = match k {
        1 => base(
            "test1",
            road,
            run(1.0, vec![DensityPiece::new(0, 5.0, 20.0, 0.5)]),
            run(1.0, vec![DensityPiece::new(0, 10.0, 25.0, 0.5)]),
            20.0,
        ),
        2 => base(
            "test2",
            road,
            run(1.0, vec![DensityPiece::new(0, 10.0, 25.0, 0.5)]),
            run(2.0, vec![DensityPiece::new(0, 10.0, 25.0, 0.5)]),
            14.0,
        ),
        3 => base(
            "test3",
            Space::Network { arcs: merge_spec(20.0) },
            run(
                1.0,
                vec![
                    DensityPiece::new(0, 0.0, 5.0, 1.0).shifted(0.5),
                    DensityPiece::new(1, 0.0, 5.0, 1.0),
                ],
            ),
            run(
                1.0,
                vec![
                    DensityPiece::new(0, 0.0, 5.0, 1.0),
                    DensityPiece::new(1, 0.0, 5.0, 1.0).shifted(0.5),
                ],
            ),
            50.0,
        ),
        4 => base(
            "test4",
            Space::Network { arcs: merge_spec(30.0) },
            run(
                1.0,
                vec![DensityPiece::new(0, 20.0, 25.0, 1.0), DensityPiece::new(1, 0.0, 5.0, 1.0)],
            ),
            run(
                1.0,
                vec![DensityPiece::new(0, 0.0, 5.0, 1.0), DensityPiece::new(1, 20.0, 25.0, 1.0)],
            ),
            55.0,
        ),
        _ => {
            return Err(Error::Precondition(format!(
                "built-in tests are numbered 1 to 4, got {k}"
            )))
        }
    };
    Ok(s)
}

/// Validated scenario with its network resolved.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub scenario: Scenario,
    pub geometry: Option<Geometry>,
    /// Mass carried by each populated path (the whole road on an interval).
    pub path_mass: f64,
}

impl Scenario {
    pub fn is_network(&self) -> bool {
        matches!(self.space, Space::Network { .. })
    }

    pub fn run(&self, run: Run) -> &RunSpec {
        match run {
            Run::Flat => &self.runs.flat,
            Run::Sharp => &self.runs.sharp,
        }
    }

    /// Whether the initial data move with `n` through an `ell_n` shift.
    pub fn depends_on_n(&self) -> bool {
        [&self.runs.flat, &self.runs.sharp]
            .iter()
            .flat_map(|r| &r.density)
            .any(|d| d.shift_in_ell_n != 0.0)
    }

    /// Checks every invariant and resolves the network.
    pub fn prepare(&self) -> Result<Prepared> {
        if !(self.t_f >= 0.0) || !self.t_f.is_finite() {
            return Err(Error::scenario("t_f", format!("must be finite and >= 0, got {}", self.t_f)));
        }
        if !(self.p >= 1.0) || !self.p.is_finite() {
            return Err(Error::scenario("p", format!("must be >= 1, got {}", self.p)));
        }
        if let Some(n) = self.n_list.iter().find(|&&n| n < 2) {
            return Err(Error::scenario("n_list", format!("entries must be >= 2, got {n}")));
        }
        if self.coarsen_to == 0 {
            return Err(Error::scenario("coarsen_to", "must be positive"));
        }
        if !(self.dx > 0.0) || !self.dx.is_finite() {
            return Err(Error::scenario("dx", format!("must be positive, got {}", self.dx)));
        }
        let (geometry, lengths) = match &self.space {
            Space::Interval { a, b } => {
                if !(b > a) || !a.is_finite() || !b.is_finite() {
                    return Err(Error::scenario("space", format!("invalid interval [{a}, {b}]")));
                }
                cells_in(b - a, self.dx, "road")?;
                (None, vec![(*a, *b)])
            }
            Space::Network { arcs } => {
                let net = RoadNetwork::build(arcs).map_err(|e| Error::scenario("space", e.to_string()))?;
                for a in net.arcs() {
                    cells_in(a.length, self.dx, &format!("arc `{}`", a.id))?;
                }
                let geo = Geometry::new(net);
                let lengths = geo.paths.iter().map(|p| (0.0, p.length)).collect();
                (Some(geo), lengths)
            }
        };

        let mut masses = [Vec::new(), Vec::new()];
        for (slot, run) in [Run::Flat, Run::Sharp].into_iter().enumerate() {
            let spec = self.run(run);
            if !(spec.v_max > 0.0) || !spec.v_max.is_finite() {
                return Err(Error::scenario("v_max", format!("must be positive, got {}", spec.v_max)));
            }
            for d in &spec.density {
                if d.path >= lengths.len() {
                    return Err(Error::scenario(
                        "density",
                        format!("path index {} but the space has {} path(s)", d.path, lengths.len()),
                    ));
                }
                if !(d.value >= 0.0 && d.value <= 1.0) {
                    return Err(Error::scenario("density", format!("value {} outside [0, 1]", d.value)));
                }
                if !(d.lo < d.hi) || !d.shift_in_ell_n.is_finite() {
                    return Err(Error::scenario("density", format!("empty piece [{}, {}]", d.lo, d.hi)));
                }
            }
            for path in 0..lengths.len() {
                // Shifts do not change the mass, so probing with a zero shift suffices.
                let r = self.density_with_ell(run, path, 0.0)?;
                if r.mass() > 0.0 {
                    if let Some((lo, hi)) = r.support() {
                        if let Some(k) = (0..r.values().len()).find(|&k| {
                            r.values()[k] <= 0.0 && r.breaks()[k] >= lo && r.breaks()[k + 1] <= hi
                        }) {
                            return Err(Error::scenario(
                                "density",
                                format!(
                                    "path {path} density vanishes on [{}, {}] inside its support",
                                    r.breaks()[k],
                                    r.breaks()[k + 1]
                                ),
                            ));
                        }
                    }
                }
                masses[slot].push(r.mass());
            }
        }

        let [flat, sharp] = masses;
        let total = |m: &[f64]| m.iter().sum::<f64>();
        if (total(&flat) - total(&sharp)).abs() > MASS_TOL * total(&flat).max(total(&sharp))
            || total(&flat) <= 0.0
        {
            return Err(Error::scenario(
                "mass",
                format!("runs must carry equal positive mass: {} vs {}", total(&flat), total(&sharp)),
            ));
        }
        let path_mass = if geometry.is_some() {
            // One vehicle length for all populations: every populated path
            // carries the same mass, and both runs populate the same paths.
            let reference = flat.iter().copied().fold(0.0, f64::max);
            for (path, (&a, &b)) in flat.iter().zip(&sharp).enumerate() {
                let populated = |m: f64| m > MASS_TOL * reference;
                if populated(a) != populated(b)
                    || (populated(a) && (a - reference).abs() > MASS_TOL * reference)
                    || (populated(b) && (b - reference).abs() > MASS_TOL * reference)
                {
                    return Err(Error::scenario(
                        "mass",
                        format!(
                            "populated paths must carry equal mass in both runs; path {path} has {a} vs {b} (reference {reference})"
                        ),
                    ));
                }
            }
            reference
        } else {
            total(&flat)
        };

        // Supports must stay inside the domain for every requested n.
        let prepared = Prepared {
            scenario: self.clone(),
            geometry,
            path_mass,
        };
        for &n in &self.n_list {
            for run in [Run::Flat, Run::Sharp] {
                for (path, &(lo, hi)) in lengths.iter().enumerate() {
                    let r = prepared.initial_density(run, path, n)?;
                    if let Some((a, b)) = r.support() {
                        if a < lo || b > hi {
                            return Err(Error::scenario(
                                "density",
                                format!("path {path} support [{a}, {b}] leaves [{lo}, {hi}] for n = {n}"),
                            ));
                        }
                    }
                }
            }
        }
        Ok(prepared)
    }

    fn density_with_ell(&self, run: Run, path: usize, ell: f64) -> Result<PiecewiseDensity> {
        let pieces: Vec<(f64, f64, f64)> = self
            .run(run)
            .density
            .iter()
            .filter(|d| d.path == path)
            .map(|d| {
                let s = d.shift_in_ell_n * ell;
                (d.lo + s, d.hi + s, d.value)
            })
            .collect();
        PiecewiseDensity::from_pieces(&pieces).map_err(|e| Error::scenario("density", e.to_string()))
    }
}

impl Prepared {
    pub fn ell_n(&self, n: usize) -> Result<f64> {
        ell_n(self.path_mass, n)
    }

    pub fn path_count(&self) -> usize {
        self.geometry.as_ref().map_or(1, |g| g.paths.len())
    }

    pub fn initial_density(&self, run: Run, path: usize, n: usize) -> Result<PiecewiseDensity> {
        self.scenario.density_with_ell(run, path, self.ell_n(n)?)
    }

    fn params(&self, run: Run, n: usize) -> Result<MicroParams> {
        MicroParams::with_default_dt(self.scenario.run(run).v_max, self.ell_n(n)?)
    }

    pub fn road_micro(&self, run: Run, n: usize) -> Result<MicroRoadState> {
        let y = discretize(&self.initial_density(run, 0, n)?, n)?;
        MicroRoadState::new(y, self.params(run, n)?)
    }

    pub fn road_macro(&self, run: Run, n: usize) -> Result<RoadGrid> {
        let Space::Interval { a, b } = self.scenario.space else {
            return Err(Error::Precondition("scenario is not on a single road".into()));
        };
        RoadGrid::from_density(a, b, self.scenario.dx, &self.initial_density(run, 0, n)?, self.scenario.run(run).v_max)
    }

    fn geo(&self) -> Result<&Geometry> {
        self.geometry
            .as_ref()
            .ok_or_else(|| Error::Precondition("scenario is not on a network".into()))
    }

    pub fn network_micro(&self, run: Run, n: usize) -> Result<MicroNetworkState> {
        let geo = self.geo()?;
        let populations = (0..geo.paths.len())
            .map(|path| {
                let r = self.initial_density(run, path, n)?;
                if r.mass() > 0.0 {
                    discretize(&r, n)
                } else {
                    Ok(Vec::new())
                }
            })
            .collect::<Result<_>>()?;
        MicroNetworkState::new(populations, self.params(run, n)?, geo)
    }

    pub fn network_macro(&self, run: Run, n: usize) -> Result<NetworkGrid> {
        let geo = self.geo()?;
        let v_max = self.scenario.run(run).v_max;
        let densities = (0..geo.paths.len())
            .map(|path| self.initial_density(run, path, n))
            .collect::<Result<Vec<_>>>()?;
        let ext = v_max * self.scenario.t_f + self.scenario.dx;
        NetworkGrid::new(geo, self.scenario.dx, v_max, ext, &densities)
    }

    /// Microscopic distances at the final time: `(D^FtL, W_micro)`. The second
    /// value is only computed on networks.
    pub fn micro_distances(&self, n: usize) -> Result<(f64, Option<f64>)> {
        let s = &self.scenario;
        match &self.geometry {
            None => {
                let a = self.road_micro(Run::Flat, n)?.simulate(s.t_f)?;
                let b = self.road_micro(Run::Sharp, n)?.simulate(s.t_f)?;
                Ok((dftl_road(&a.positions, &b.positions, a.params.ell_n, s.p)?, None))
            }
            Some(geo) => {
                let a = self.network_micro(Run::Flat, n)?.simulate(s.t_f, geo)?;
                let b = self.network_micro(Run::Sharp, n)?.simulate(s.t_f, geo)?;
                Ok((
                    dftl_network(&a, &b, geo, s.p)?,
                    Some(w_micro_network(&a, &b, geo, s.p)?),
                ))
            }
        }
    }

    /// `D^LWR` at the final time for the initial data belonging to `n`.
    pub fn macro_distance(&self, n: usize) -> Result<DistanceReport> {
        let s = &self.scenario;
        match &self.geometry {
            None => {
                let a = self.road_macro(Run::Flat, n)?.simulate(s.t_f)?;
                let b = self.road_macro(Run::Sharp, n)?.simulate(s.t_f)?;
                dlwr_road(&a.to_density()?, &b.to_density()?, s.p, s.coarsen_to)
            }
            Some(geo) => {
                let a = self.network_macro(Run::Flat, n)?.simulate(s.t_f)?;
                let b = self.network_macro(Run::Sharp, n)?.simulate(s.t_f)?;
                dlwr_network(&a, &b, &geo.net, s.p, s.coarsen_to)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub n: usize,
    pub ell_n: f64,
    pub dftl: f64,
    pub dlwr: f64,
    pub xi: f64,
    /// Label-blind microscopic distance; networks only.
    pub w_micro: Option<f64>,
    pub dlwr_error_bound: f64,
}

impl SweepRow {
    fn new(n: usize, ell_n: f64, (dftl, w_micro): (f64, Option<f64>), dlwr: DistanceReport) -> Self {
        Self {
            n,
            ell_n,
            dftl,
            dlwr: dlwr.value,
            xi: (dftl - dlwr.value).abs(),
            w_micro,
            dlwr_error_bound: dlwr.error_bound,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub scenario_id: String,
    pub network: bool,
    pub dx: f64,
    pub dt_policy: String,
    pub runtime_secs: f64,
    pub rows: Vec<SweepRow>,
}

/// Micro and macro distances for one vehicle count.
pub fn run_pair(scenario: &Scenario, n: usize) -> Result<SweepRow> {
    let prepared = scenario.prepare()?;
    run_prepared(&prepared, n, None)
}

fn run_prepared(prepared: &Prepared, n: usize, macro_cached: Option<DistanceReport>) -> Result<SweepRow> {
    if n < 2 {
        return Err(Error::Precondition(format!("need at least 2 vehicles, got {n}")));
    }
    let micro = prepared.micro_distances(n)?;
    let dlwr = match macro_cached {
        Some(d) => d,
        None => prepared.macro_distance(n)?,
    };
    Ok(SweepRow::new(n, prepared.ell_n(n)?, micro, dlwr))
}

/// One row per entry of the scenario's `n_list`, computed in parallel.
pub fn xi_sweep(scenario: &Scenario) -> Result<SweepResult> {
    let start = Instant::now();
    let prepared = scenario.prepare()?;
    // Without n-dependent initial data the macroscopic runs are shared by all rows.
    let cached = match (scenario.depends_on_n(), scenario.n_list.first()) {
        (false, Some(&n)) => Some(prepared.macro_distance(n)?),
        _ => None,
    };
    let rows = scenario
        .n_list
        .par_iter()
        .map(|&n| run_prepared(&prepared, n, cached))
        .collect::<Result<Vec<_>>>()?;
    Ok(SweepResult {
        scenario_id: scenario.id.clone(),
        network: scenario.is_network(),
        dx: scenario.dx,
        dt_policy: format!(
            "micro: min(0.01, ell_n/(4 v_max)) (e.g. {} at n=100, v_max=1); macro: CFL 0.5",
            default_dt(1.0, prepared.path_mass / 99.0)
        ),
        runtime_secs: start.elapsed().as_secs_f64(),
        rows,
    })
}

pub const CSV_HEADER: &str = "n,ell_n,dftl,dlwr,xi";

/// Writes the sweep table. Network sweeps carry an extra `w_micro` column.
pub fn write_csv(result: &SweepResult, mut out: impl Write) -> std::io::Result<()> {
    if result.network {
        writeln!(out, "{CSV_HEADER},w_micro")?;
    } else {
        writeln!(out, "{CSV_HEADER}")?;
    }
    for r in &result.rows {
        write!(out, "{},{},{},{},{}", r.n, r.ell_n, r.dftl, r.dlwr, r.xi)?;
        if result.network {
            match r.w_micro {
                Some(w) => write!(out, ",{w}")?,
                None => write!(out, ",")?,
            }
        }
        writeln!(out)?;
    }
    Ok(())
}

pub fn export_results(result: &SweepResult, destination: &FsPath) -> Result<()> {
    let mut buf = Vec::new();
    write_csv(result, &mut buf)?;
    std::fs::write(destination, buf)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn builtin_masses() {
        let t1 = builtin_test(1).unwrap().prepare().unwrap();
        assert_eq!(t1.path_mass, 7.5);
        let t3 = builtin_test(3).unwrap().prepare().unwrap();
        for n in [25, 400] {
            for run in [Run::Flat, Run::Sharp] {
                let m: f64 = (0..2).map(|p| t3.initial_density(run, p, n).unwrap().mass()).sum();
                assert_abs_diff_eq!(m, 10.0, epsilon = 1e-12);
            }
        }
        assert!(builtin_test(5).is_err());
        assert!(builtin_test(0).is_err());
        for k in 1..=4 {
            builtin_test(k).unwrap().prepare().unwrap();
        }
    }

    #[test]
    fn test3_shift_follows_vehicle_length() {
        let t3 = builtin_test(3).unwrap().prepare().unwrap();
        let ell = t3.ell_n(25).unwrap();
        let r = t3.initial_density(Run::Flat, 0, 25).unwrap();
        assert_eq!(r.support(), Some((0.5 * ell, 5.0 + 0.5 * ell)));
        assert!(builtin_test(3).unwrap().depends_on_n());
        assert!(!builtin_test(4).unwrap().depends_on_n());
    }

    #[test]
    fn invariant_errors_name_fields() {
        let field_of = |s: &Scenario| match s.prepare() {
            Err(Error::Scenario { field, .. }) => field,
            other => panic!("expected scenario error, got {other:?}"),
        };
        let mut s = builtin_test(1).unwrap();
        s.runs.sharp.density[0].value = 0.25;
        assert_eq!(field_of(&s), "mass");

        let mut s = builtin_test(1).unwrap();
        s.dx = 0.03;
        assert_eq!(field_of(&s), "dx");

        let mut s = builtin_test(3).unwrap();
        s.dx = 0.3;
        assert_eq!(field_of(&s), "dx");

        let mut s = builtin_test(1).unwrap();
        s.n_list = vec![1];
        assert_eq!(field_of(&s), "n_list");

        let mut s = builtin_test(1).unwrap();
        s.runs.flat.density.push(DensityPiece::new(0, 30.0, 40.0, 0.5));
        s.runs.sharp.density.push(DensityPiece::new(0, 30.0, 40.0, 0.5));
        assert_eq!(field_of(&s), "density");
    }

    #[test]
    fn identical_runs_give_zero() {
        let mut s = builtin_test(1).unwrap();
        s.runs.sharp = s.runs.flat.clone();
        s.n_list = vec![10, 20];
        let r = xi_sweep(&s).unwrap();
        for row in &r.rows {
            assert_eq!((row.dftl, row.dlwr, row.xi), (0.0, 0.0, 0.0));
        }
    }

    #[test]
    fn translated_road_distances() {
        let s = builtin_test(1).unwrap();
        let row = run_pair(&s, 25).unwrap();
        // Exact translation by 5: D^FtL = ell_n * n * 5, D^LWR = M * 5.
        assert_abs_diff_eq!(row.dftl, 7.5 / 24.0 * 25.0 * 5.0, epsilon = 1e-9);
        assert_abs_diff_eq!(row.dlwr, 37.5, epsilon = 1e-9);
        assert_eq!(row.xi, (row.dftl - row.dlwr).abs());
    }

    #[test]
    fn run_pair_is_reproducible() {
        let s = builtin_test(2).unwrap();
        assert_eq!(run_pair(&s, 30).unwrap(), run_pair(&s, 30).unwrap());
    }

    fn sample_result(rows: usize, network: bool) -> SweepResult {
        SweepResult {
            scenario_id: "x".into(),
            network,
            dx: 0.05,
            dt_policy: String::new(),
            runtime_secs: 0.0,
            rows: (0..rows)
                .map(|k| SweepRow {
                    n: 25 << k,
                    ell_n: 0.1 / 3.0,
                    dftl: 1.0 + k as f64,
                    dlwr: 0.5,
                    xi: 0.5 + k as f64,
                    w_micro: network.then_some(0.25),
                    dlwr_error_bound: 0.0,
                })
                .collect(),
        }
    }

    #[test]
    fn csv_format() {
        let mut buf = Vec::new();
        write_csv(&sample_result(0, false), &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "n,ell_n,dftl,dlwr,xi\n");

        let mut buf = Vec::new();
        write_csv(&sample_result(5, false), &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<_> = text.lines().collect();
        assert_eq!(lines.len(), 6);
        assert_eq!(lines[1], "25,0.03333333333333333,1,0.5,0.5");
        let parsed: f64 = lines[1].split(',').nth(1).unwrap().parse().unwrap();
        assert_eq!(parsed, 0.1 / 3.0);

        let mut buf = Vec::new();
        write_csv(&sample_result(1, true), &mut buf).unwrap();
        assert!(String::from_utf8(buf).unwrap().starts_with("n,ell_n,dftl,dlwr,xi,w_micro\n"));
    }

    #[test]
    fn export_is_byte_stable() {
        let dir = tempfile::tempdir().unwrap();
        let r = sample_result(3, false);
        let (a, b) = (dir.path().join("a.csv"), dir.path().join("b.csv"));
        export_results(&r, &a).unwrap();
        export_results(&r, &b).unwrap();
        assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
        assert!(export_results(&r, &dir.path().join("missing/dir/out.csv")).is_err());
    }
}
