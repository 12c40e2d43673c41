//! Follow-the-Leader dynamics integrated with explicit Euler.
//!
//! On a single road vehicle `i` drives at `w(y[i+1] - y[i])` and the leader at
//! `v_max`. On a network each vehicle follows its own path and reacts to the
//! nearest vehicle ahead on that path, whatever its population.

use crate::geometry::{NetworkPoint, Path, RoadNetwork};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MicroParams {
    pub v_max: f64,
    pub ell_n: f64,
    pub dt: f64,
}

impl MicroParams {
    pub fn new(v_max: f64, ell_n: f64, dt: f64) -> Result<Self> {
        for (name, v) in [("v_max", v_max), ("ell_n", ell_n), ("dt", dt)] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::Precondition(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(Self { v_max, ell_n, dt })
    }

    /// Uses the default step `min(0.01, ell_n / (4 v_max))`.
    pub fn with_default_dt(v_max: f64, ell_n: f64) -> Result<Self> {
        Self::new(v_max, ell_n, default_dt(v_max, ell_n))
    }
}

pub fn default_dt(v_max: f64, ell_n: f64) -> f64 {
    0.01f64.min(ell_n / (4.0 * v_max))
}

/// `v(ell_n / delta)` with `v(rho) = v_max (1 - rho)`; defined for `delta >= ell_n`.
pub fn follow_velocity(delta: f64, p: &MicroParams) -> Result<f64> {
    if !(delta >= p.ell_n) {
        return Err(Error::Precondition(format!(
            "gap {delta} shorter than vehicle length {}",
            p.ell_n
        )));
    }
    Ok(w(delta, p))
}

/// Extension of [`follow_velocity`] that stops vehicles closer than `ell_n`.
pub fn follow_velocity_ext(delta: f64, p: &MicroParams) -> f64 {
    if delta <= p.ell_n {
        0.0
    } else {
        w(delta, p)
    }
}

#[inline]
fn w(delta: f64, p: &MicroParams) -> f64 {
    p.v_max * (1.0 - p.ell_n / delta)
}

#[derive(Debug, Clone, PartialEq)]
pub struct MicroRoadState {
    /// Ascending positions; the last entry is the leader.
    pub positions: Vec<f64>,
    pub params: MicroParams,
}

impl MicroRoadState {
    pub fn new(positions: Vec<f64>, params: MicroParams) -> Result<Self> {
        let state = Self { positions, params };
        if let Some(gap) = state.min_gap() {
            if gap < params.ell_n - crate::scale::TOL_OVERLAP {
                return Err(Error::Precondition(format!(
                    "vehicles overlap: min gap {gap} < ell_n {}",
                    params.ell_n
                )));
            }
        }
        Ok(state)
    }

    pub fn min_gap(&self) -> Option<f64> {
        self.positions
            .windows(2)
            .map(|w| w[1] - w[0])
            .min_by(f64::total_cmp)
    }

    pub fn step(&self) -> Self {
        self.step_by(self.params.dt)
    }

    fn step_by(&self, dt: f64) -> Self {
        let y = &self.positions;
        let n = y.len();
        let mut next = Vec::with_capacity(n);
        for i in 0..n {
            let v = if i + 1 < n {
                follow_velocity_ext(y[i + 1] - y[i], &self.params)
            } else {
                self.params.v_max
            };
            next.push(y[i] + dt * v);
        }
        Self {
            positions: next,
            params: self.params,
        }
    }

    /// Integrates to `t_f`, shortening the final step to land on it exactly.
    pub fn simulate(&self, t_f: f64) -> Result<Self> {
        self.simulate_with(t_f, |_| {})
    }

    /// As [`MicroRoadState::simulate`], calling `observe` after every step.
    pub fn simulate_with(&self, t_f: f64, mut observe: impl FnMut(&Self)) -> Result<Self> {
        let mut state = self.clone();
        for dt in time_steps(t_f, self.params.dt)? {
            state = state.step_by(dt);
            observe(&state);
        }
        Ok(state)
    }
}

/// Step sizes covering `[0, t_f]`: `ceil(t_f / dt)` steps, the last one shortened.
pub(crate) fn time_steps(t_f: f64, dt: f64) -> Result<impl Iterator<Item = f64>> {
    if !(t_f >= 0.0) || !t_f.is_finite() {
        return Err(Error::Precondition(format!("final time must be non-negative, got {t_f}")));
    }
    let count = (t_f / dt).ceil() as usize;
    Ok((0..count).filter_map(move |k| {
        let start = k as f64 * dt;
        let end = ((k + 1) as f64 * dt).min(t_f);
        (end > start).then_some(end - start)
    }))
}

/// Paths and network shared by all populations of a network simulation.
#[derive(Debug, Clone)]
pub struct Geometry {
    pub net: RoadNetwork,
    pub paths: Vec<Path>,
}

impl Geometry {
    pub fn new(net: RoadNetwork) -> Self {
        let paths = net.enumerate_paths();
        Self { net, paths }
    }
}

/// Vehicle label: (index within population, population).
pub type VehicleId = (usize, usize);

/// Vehicle coordinates per population, each measured along that population's path.
#[derive(Debug, Clone, PartialEq)]
pub struct MicroNetworkState {
    pub populations: Vec<Vec<f64>>,
    pub params: MicroParams,
}

impl MicroNetworkState {
    pub fn new(populations: Vec<Vec<f64>>, params: MicroParams, geo: &Geometry) -> Result<Self> {
        if populations.len() != geo.paths.len() {
            return Err(Error::Precondition(format!(
                "{} populations for {} paths",
                populations.len(),
                geo.paths.len()
            )));
        }
        for (alpha, ys) in populations.iter().enumerate() {
            if ys.iter().any(|y| !(*y >= 0.0) || !y.is_finite()) {
                return Err(Error::Precondition(format!(
                    "population {alpha} has a coordinate outside its path"
                )));
            }
            if ys.windows(2).any(|w| !(w[0] < w[1])) {
                return Err(Error::Precondition(format!(
                    "population {alpha} is not strictly increasing"
                )));
            }
        }
        Ok(Self {
            populations,
            params,
        })
    }

    pub fn vehicle_count(&self) -> usize {
        self.populations.iter().map(Vec::len).sum()
    }

    pub fn points(&self, geo: &Geometry) -> Vec<Vec<NetworkPoint>> {
        self.populations
            .iter()
            .zip(&geo.paths)
            .map(|(ys, path)| {
                ys.iter()
                    .map(|&y| path.point_at(&geo.net, y).expect("coordinates stay non-negative"))
                    .collect()
            })
            .collect()
    }

    /// Nearest vehicle ahead of `(i, alpha)` along path `alpha`.
    ///
    /// Vehicles sharing a coordinate are ordered by population and then index,
    /// so the one with the smaller label is behind.
    pub fn next_vehicle(&self, i: usize, alpha: usize, geo: &Geometry) -> Option<VehicleId> {
        let points = self.points(geo);
        let order = path_order(&points, &geo.paths[alpha]);
        let pos = order.iter().position(|e| e.id == (i, alpha))?;
        order.get(pos + 1).map(|e| e.id)
    }

    /// Distance along `alpha` to the vehicle ahead of each member of that population.
    fn headways(&self, points: &[Vec<NetworkPoint>], alpha: usize, geo: &Geometry) -> Vec<Option<f64>> {
        let order = path_order(points, &geo.paths[alpha]);
        let mut out = vec![None; self.populations[alpha].len()];
        for (k, e) in order.iter().enumerate() {
            if e.id.1 == alpha {
                out[e.id.0] = order.get(k + 1).map(|next| next.coord - e.coord);
            }
        }
        out
    }

    /// One synchronous explicit Euler step.
    pub fn step(&self, geo: &Geometry) -> Self {
        self.step_by(self.params.dt, geo)
    }

    fn step_by(&self, dt: f64, geo: &Geometry) -> Self {
        let points = self.points(geo);
        let populations = self
            .populations
            .iter()
            .enumerate()
            .map(|(alpha, ys)| {
                let gaps = self.headways(&points, alpha, geo);
                ys.iter()
                    .zip(gaps)
                    .map(|(&y, gap)| {
                        let v = match gap {
                            Some(d) => follow_velocity_ext(d, &self.params),
                            None => self.params.v_max,
                        };
                        y + dt * v
                    })
                    .collect()
            })
            .collect();
        Self {
            populations,
            params: self.params,
        }
    }

    pub fn simulate(&self, t_f: f64, geo: &Geometry) -> Result<Self> {
        let mut state = self.clone();
        for dt in time_steps(t_f, self.params.dt)? {
            state = state.step_by(dt, geo);
        }
        Ok(state)
    }
}

struct OnPath {
    coord: f64,
    id: VehicleId,
}

/// All vehicles currently on `path`, sorted by (coordinate, population, index).
fn path_order(points: &[Vec<NetworkPoint>], path: &Path) -> Vec<OnPath> {
    let mut order: Vec<OnPath> = points
        .iter()
        .enumerate()
        .flat_map(|(beta, pts)| {
            pts.iter().enumerate().filter_map(move |(j, p)| {
                path.coordinate(p).map(|coord| OnPath { coord, id: (j, beta) })
            })
        })
        .collect();
    // Populations arrive as sorted runs, which the stable merge sort exploits.
    order.sort_by(|a, b| {
        a.coord
            .total_cmp(&b.coord)
            .then(a.id.1.cmp(&b.id.1))
            .then(a.id.0.cmp(&b.id.0))
    });
    order
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{merge_network, ArcSpec};
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn params(v_max: f64, ell: f64, dt: f64) -> MicroParams {
        MicroParams::new(v_max, ell, dt).unwrap()
    }

    #[test]
    fn velocity_examples() {
        let p = params(1.0, 0.5, 0.1);
        assert_eq!(follow_velocity(0.5, &p).unwrap(), 0.0);
        assert_eq!(follow_velocity(1.0, &p).unwrap(), 0.5);
        assert!(follow_velocity(0.4, &p).is_err());
        assert!((follow_velocity(1e12, &p).unwrap() - 1.0).abs() < 1e-9);

        assert_eq!(follow_velocity_ext(0.0, &p), 0.0);
        assert_eq!(follow_velocity_ext(0.5, &p), 0.0);
        assert_eq!(follow_velocity_ext(2.0, &p), 0.75);
    }

    #[test]
    fn default_time_step() {
        assert_eq!(default_dt(1.0, 1.0), 0.01);
        assert_eq!(default_dt(2.0, 0.02), 0.0025);
    }

    #[test]
    fn road_step_examples() {
        let s = MicroRoadState::new(vec![0.0, 1.0], params(1.0, 0.5, 0.1)).unwrap();
        let next = s.step();
        assert_abs_diff_eq!(next.positions[0], 0.05, epsilon = 1e-15);
        assert_abs_diff_eq!(next.positions[1], 1.1, epsilon = 1e-15);

        let jam = MicroRoadState::new(vec![0.0, 0.5, 1.0], params(1.0, 0.5, 0.1)).unwrap();
        let next = jam.step();
        assert_eq!(&next.positions[..2], &[0.0, 0.5]);
        assert_abs_diff_eq!(next.positions[2], 1.1, epsilon = 1e-15);

        let solo = MicroRoadState::new(vec![3.0], params(2.0, 0.5, 0.1)).unwrap();
        assert_abs_diff_eq!(solo.step().positions[0], 3.2, epsilon = 1e-15);
    }

    #[test]
    fn road_rejects_overlap() {
        assert!(MicroRoadState::new(vec![0.0, 0.3], params(1.0, 0.5, 0.1)).is_err());
    }

    #[test]
    fn simulate_lands_on_final_time() {
        let s = MicroRoadState::new(vec![0.0], params(1.0, 0.5, 0.3)).unwrap();
        assert_eq!(s.simulate(0.0).unwrap(), s);
        let end = s.simulate(20.0).unwrap();
        assert_abs_diff_eq!(end.positions[0], 20.0, epsilon = 1e-12);
        assert_eq!(time_steps(1.0, 0.3).unwrap().count(), 4);
        assert_abs_diff_eq!(time_steps(1.0, 0.3).unwrap().sum::<f64>(), 1.0, epsilon = 1e-15);
    }

    fn merge_geo() -> Geometry {
        Geometry::new(merge_network(20.0).unwrap())
    }

    #[test]
    fn next_vehicle_examples() {
        let geo = merge_geo();
        let p = params(1.0, 0.5, 0.01);
        // Population 2 vehicle at A3 offset 2, i.e. coordinate 22 on path 2.
        let s = MicroNetworkState::new(vec![vec![5.0, 10.0], vec![22.0]], p, &geo).unwrap();
        assert_eq!(s.next_vehicle(0, 0, &geo), Some((1, 0)));
        assert_eq!(s.next_vehicle(1, 0, &geo), Some((0, 1)));
        assert_eq!(s.next_vehicle(0, 1, &geo), None);

        // Vehicles on A2 are invisible from path 1.
        let s = MicroNetworkState::new(vec![vec![5.0], vec![10.0]], p, &geo).unwrap();
        assert_eq!(s.next_vehicle(0, 0, &geo), None);
    }

    #[test]
    fn overlapping_vehicles_stop_the_follower() {
        let geo = merge_geo();
        let p = params(1.0, 0.5, 0.01);
        let s = MicroNetworkState::new(vec![vec![25.0], vec![25.0]], p, &geo).unwrap();
        assert_eq!(s.next_vehicle(0, 0, &geo), Some((0, 1)));
        let next = s.step(&geo);
        assert_eq!(next.populations[0][0], 25.0);
        assert_abs_diff_eq!(next.populations[1][0], 25.01, epsilon = 1e-15);
    }

    #[test]
    fn extension_leader_moves_freely() {
        let geo = merge_geo();
        let s = MicroNetworkState::new(vec![vec![45.0], vec![]], params(1.0, 0.5, 0.5), &geo).unwrap();
        assert_eq!(s.step(&geo).populations[0][0], 45.5);
    }

    proptest! {
        #[test]
        fn network_reduces_to_road(gaps in prop::collection::vec(0.5f64..3.0, 1..40), dt in 0.01f64..0.12) {
            let p = params(1.0, 0.5, dt);
            let mut y = vec![0.0];
            for g in gaps {
                y.push(y.last().unwrap() + g);
            }
            let road = MicroRoadState::new(y.clone(), p).unwrap();
            let geo = Geometry::new(RoadNetwork::build(&[ArcSpec::new("A", "O", "D", 200.0)]).unwrap());
            let net = MicroNetworkState::new(vec![y], p, &geo).unwrap();
            let mut r = road;
            let mut s = net;
            for _ in 0..50 {
                r = r.step();
                s = s.step(&geo);
                prop_assert_eq!(&r.positions, &s.populations[0]);
            }
        }

        #[test]
        fn road_keeps_order_and_gaps(gaps in prop::collection::vec(0.2f64..2.0, 1..60)) {
            let ell = 0.2;
            let p = MicroParams::with_default_dt(1.0, ell).unwrap();
            let mut y = vec![0.0];
            for g in gaps {
                y.push(y.last().unwrap() + g);
            }
            let s = MicroRoadState::new(y, p).unwrap();
            let mut prev = s.clone();
            s.simulate_with(5.0, |st| {
                assert!(st.min_gap().unwrap() >= ell - 1e-9);
                for (a, b) in prev.positions.iter().zip(&st.positions) {
                    assert!(b - a >= 0.0 && b - a <= p.dt * p.v_max + 1e-12);
                }
                prev = st.clone();
            }).unwrap();
        }
    }
}
