//! LWR conservation law solvers.
//!
//! Single road: classical Godunov scheme with demand/supply flux for
//! `f(rho) = v_max rho (1 - rho)`. Networks: one conservation law per path,
//! coupled through the total density on shared arcs, discretized with the
//! upwind-density / downstream-velocity flux `eta_j v*(rho_{j+1})`.

use crate::geometry::RoadNetwork;
use crate::micro::{time_steps, Geometry};
use crate::scale::PiecewiseDensity;
use crate::{Error, Result};

pub const CFL_MAX: f64 = 0.5;
pub const DEFAULT_DX: f64 = 0.05;

const CFL_SLACK: f64 = 1e-12;

/// `v(r)` for `r <= 1`, zero for overfull cells.
pub fn extended_velocity(r: f64, v_max: f64) -> f64 {
    if r >= 1.0 {
        0.0
    } else {
        v_max * (1.0 - r)
    }
}

fn flux(rho: f64, v_max: f64) -> f64 {
    v_max * rho * (1.0 - rho)
}

pub fn godunov_flux(left: f64, right: f64, v_max: f64) -> f64 {
    const SONIC: f64 = 0.5;
    let demand = if left <= SONIC {
        flux(left, v_max)
    } else {
        flux(SONIC, v_max)
    };
    let supply = if right <= SONIC {
        flux(SONIC, v_max)
    } else {
        flux(right, v_max)
    };
    demand.min(supply)
}

/// Number of `dx` cells in `len`, or an error naming `what` if `len` is not a multiple.
pub fn cells_in(len: f64, dx: f64, what: &str) -> Result<usize> {
    if !(dx > 0.0) || !dx.is_finite() {
        return Err(Error::scenario("dx", format!("cell width must be positive, got {dx}")));
    }
    let cells = (len / dx).round();
    if cells < 1.0 || (cells * dx - len).abs() > 1e-9 * len.abs().max(1.0) {
        return Err(Error::scenario(
            "dx",
            format!("{what} length {len} is not an integer multiple of dx = {dx}"),
        ));
    }
    Ok(cells as usize)
}

fn check_cfl(dt: f64, v_max: f64, dx: f64) -> Result<()> {
    let nu = dt * v_max / dx;
    if nu > CFL_MAX + CFL_SLACK {
        Err(Error::Cfl(nu, CFL_MAX))
    } else {
        Ok(())
    }
}

/// Largest step allowed by the CFL rule.
pub fn cfl_dt(v_max: f64, dx: f64) -> f64 {
    CFL_MAX * dx / v_max
}

fn cell_averages(r: &PiecewiseDensity, origin: f64, dx: f64, cells: usize) -> Vec<f64> {
    (0..cells)
        .map(|j| {
            let lo = origin + j as f64 * dx;
            r.integral(lo, lo + dx) / dx
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct RoadGrid {
    pub a: f64,
    pub dx: f64,
    pub rho: Vec<f64>,
    pub v_max: f64,
}

impl RoadGrid {
    /// Cell averages of `r` on `[a, b]`, integrated exactly.
    pub fn from_density(a: f64, b: f64, dx: f64, r: &PiecewiseDensity, v_max: f64) -> Result<Self> {
        if !(b > a) {
            return Err(Error::scenario("space", format!("empty interval [{a}, {b}]")));
        }
        let cells = cells_in(b - a, dx, "road")?;
        if let Some((lo, hi)) = r.support() {
            if lo < a || hi > b {
                return Err(Error::scenario(
                    "density",
                    format!("support [{lo}, {hi}] leaves the road [{a}, {b}]"),
                ));
            }
        }
        Ok(Self {
            a,
            dx,
            rho: cell_averages(r, a, dx, cells),
            v_max,
        })
    }

    pub fn mass(&self) -> f64 {
        self.rho.iter().sum::<f64>() * self.dx
    }

    /// One Godunov step with zero-density ghost cells on both ends.
    pub fn step(&self, dt: f64) -> Result<Self> {
        check_cfl(dt, self.v_max, self.dx)?;
        let lambda = dt / self.dx;
        let n = self.rho.len();
        let at = |j: isize| -> f64 {
            if j < 0 || j as usize >= n {
                0.0
            } else {
                self.rho[j as usize]
            }
        };
        // Interface k sits between cells k-1 and k.
        let fluxes: Vec<f64> = (0..=n as isize)
            .map(|k| godunov_flux(at(k - 1), at(k), self.v_max))
            .collect();
        let rho = self
            .rho
            .iter()
            .enumerate()
            .map(|(j, &r)| r - lambda * (fluxes[j + 1] - fluxes[j]))
            .collect();
        Ok(Self { rho, ..self.clone() })
    }

    pub fn simulate(&self, t_f: f64) -> Result<Self> {
        self.simulate_with(t_f, |_| {})
    }

    pub fn simulate_with(&self, t_f: f64, mut observe: impl FnMut(&Self)) -> Result<Self> {
        let mut grid = self.clone();
        for dt in time_steps(t_f, cfl_dt(self.v_max, self.dx))? {
            grid = grid.step(dt)?;
            observe(&grid);
        }
        Ok(grid)
    }

    pub fn to_density(&self) -> Result<PiecewiseDensity> {
        let breaks = (0..=self.rho.len())
            .map(|j| self.a + j as f64 * self.dx)
            .collect();
        PiecewiseDensity::new(breaks, self.rho.clone())
    }
}

/// Per-path densities on a network, with physical cells shared between paths.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkGrid {
    dx: f64,
    v_max: f64,
    /// `eta[alpha][j]`: density of population `alpha` in cell `j` of its path.
    pub eta: Vec<Vec<f64>>,
    /// Physical slot of each path cell.
    slots: Vec<Vec<usize>>,
    /// `(arc, cell index along the arc)` of each slot; indices past the arc
    /// length lie on the virtual extension.
    locations: Vec<(usize, usize)>,
}

impl NetworkGrid {
    /// Builds the grid and averages each path's initial density onto it.
    ///
    /// Destination arcs get `ext_len` worth of extension cells (rounded up).
    pub fn new(
        geo: &Geometry,
        dx: f64,
        v_max: f64,
        ext_len: f64,
        densities: &[PiecewiseDensity],
    ) -> Result<Self> {
        if densities.len() != geo.paths.len() {
            return Err(Error::scenario(
                "density",
                format!("{} path densities for {} paths", densities.len(), geo.paths.len()),
            ));
        }
        let net: &RoadNetwork = &geo.net;
        let ext_cells = (ext_len / dx - 1e-9).ceil().max(1.0) as usize;
        let mut first_slot = Vec::with_capacity(net.arcs().len());
        let mut locations = Vec::new();
        for (arc, a) in net.arcs().iter().enumerate() {
            let mut cells = cells_in(a.length, dx, &format!("arc `{}`", a.id))?;
            if net.is_destination_arc(arc) {
                cells += ext_cells;
            }
            first_slot.push(locations.len());
            locations.extend((0..cells).map(|c| (arc, c)));
        }
        let slot_count = |arc: usize| {
            let end = first_slot.get(arc + 1).copied().unwrap_or(locations.len());
            end - first_slot[arc]
        };
        let slots: Vec<Vec<usize>> = geo
            .paths
            .iter()
            .map(|p| {
                p.arcs
                    .iter()
                    .enumerate()
                    .flat_map(|(k, &arc)| {
                        let physical = (net.arc(arc).length / dx).round() as usize;
                        let count = if k + 1 == p.arcs.len() { slot_count(arc) } else { physical };
                        let base = first_slot[arc];
                        (0..count).map(move |c| base + c)
                    })
                    .collect()
            })
            .collect();
        let eta = densities
            .iter()
            .zip(&slots)
            .zip(&geo.paths)
            .map(|((r, s), p)| {
                if let Some((lo, hi)) = r.support() {
                    let end = s.len() as f64 * dx;
                    if lo < 0.0 || hi > end {
                        return Err(Error::scenario(
                            "density",
                            format!("path {} density support [{lo}, {hi}] leaves [0, {end}]", p.index),
                        ));
                    }
                }
                Ok(cell_averages(r, 0.0, dx, s.len()))
            })
            .collect::<Result<_>>()?;
        Ok(Self {
            dx,
            v_max,
            eta,
            slots,
            locations,
        })
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    pub fn v_max(&self) -> f64 {
        self.v_max
    }

    pub fn slot_location(&self, slot: usize) -> (usize, usize) {
        self.locations[slot]
    }

    pub fn slot_totals(&self) -> Vec<f64> {
        let mut rho = vec![0.0; self.locations.len()];
        for (eta, slots) in self.eta.iter().zip(&self.slots) {
            for (&e, &s) in eta.iter().zip(slots) {
                rho[s] += e;
            }
        }
        rho
    }

    /// Total density in the physical cell under cell `j` of path `alpha`.
    pub fn total_density(&self, alpha: usize, j: usize) -> f64 {
        let target = self.slots[alpha][j];
        self.eta
            .iter()
            .zip(&self.slots)
            .filter_map(|(eta, slots)| slots.iter().position(|&s| s == target).map(|k| eta[k]))
            .sum()
    }

    pub fn path_mass(&self, alpha: usize) -> f64 {
        self.eta[alpha].iter().sum::<f64>() * self.dx
    }

    pub fn mass(&self) -> f64 {
        (0..self.eta.len()).map(|a| self.path_mass(a)).sum()
    }

    pub fn step(&self, dt: f64) -> Result<Self> {
        check_cfl(dt, self.v_max, self.dx)?;
        let lambda = dt / self.dx;
        let rho = self.slot_totals();
        let eta = self
            .eta
            .iter()
            .zip(&self.slots)
            .map(|(eta, slots)| {
                let n = eta.len();
                // out[j]: flux leaving cell j downstream; past the end the ghost is empty.
                let out: Vec<f64> = (0..n)
                    .map(|j| {
                        let down = if j + 1 < n { rho[slots[j + 1]] } else { 0.0 };
                        eta[j] * extended_velocity(down, self.v_max)
                    })
                    .collect();
                (0..n)
                    .map(|j| {
                        let inflow = if j > 0 { out[j - 1] } else { 0.0 };
                        eta[j] - lambda * (out[j] - inflow)
                    })
                    .collect()
            })
            .collect();
        Ok(Self {
            eta,
            ..self.clone()
        })
    }

    pub fn simulate(&self, t_f: f64) -> Result<Self> {
        self.simulate_with(t_f, |_| {})
    }

    pub fn simulate_with(&self, t_f: f64, mut observe: impl FnMut(&Self)) -> Result<Self> {
        let mut grid = self.clone();
        for dt in time_steps(t_f, cfl_dt(self.v_max, self.dx))? {
            grid = grid.step(dt)?;
            observe(&grid);
        }
        Ok(grid)
    }
}
