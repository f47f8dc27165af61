use std::sync::Arc;

use log::warn;

use super::potential::{classical_force, quantum_force, quantum_potential, VectorField};
use super::velocity::guidance_field;
use crate::dynamics::EvolutionRecord;
use crate::error::{Error, Result};
use crate::field::{Boundary, ParticleSystem, SpatialGrid, DEFAULT_NODE_REL};
use crate::io::{fmt_f64, CsvBuilder};

/// Per-snapshot vector fields over every configuration axis, interpolated
/// multilinearly in space and linearly in time.
#[derive(Clone, Debug)]
pub struct SpaceTimeField {
    grid: Arc<SpatialGrid>,
    times: Vec<f64>,
    /// [snapshot][component][flat index]
    data: Vec<Vec<Vec<f64>>>,
    masks: Vec<Vec<bool>>,
}

/// One interpolated sample.
#[derive(Clone, Debug, PartialEq)]
pub struct Sample {
    pub value: Vec<f64>,
    /// Some corner of the interpolation cell was masked.
    pub near_node: bool,
}

impl SpaceTimeField {
    pub fn new(grid: Arc<SpatialGrid>, times: Vec<f64>, fields: Vec<VectorField>) -> Result<Self> {
        if times.len() != fields.len() || times.is_empty() {
            return Err(Error::InvalidArgument("one field per snapshot time is required".into()));
        }
        let mut data = Vec::with_capacity(fields.len());
        let mut masks = Vec::with_capacity(fields.len());
        for f in fields {
            data.push(f.components.into_iter().map(|c| c.into_values()).collect());
            masks.push(f.mask);
        }
        Ok(Self {
            grid,
            times,
            data,
            masks,
        })
    }

    pub fn grid(&self) -> &SpatialGrid {
        &self.grid
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn components(&self) -> usize {
        self.data[0].len()
    }

    /// Largest unmasked magnitude over every snapshot.
    pub fn max_magnitude(&self) -> f64 {
        let mut best: f64 = 0.0;
        for (comps, mask) in self.data.iter().zip(&self.masks) {
            for p in 0..mask.len() {
                if !mask[p] {
                    best = best.max(comps.iter().map(|c| c[p] * c[p]).sum::<f64>().sqrt());
                }
            }
        }
        best
    }

    /// Cell corners and weights around `x`, or None outside the grid.
    fn stencil(&self, x: &[f64]) -> Option<Vec<(usize, f64)>> {
        let g = &self.grid;
        let d = g.total_dim();
        let mut lo = vec![0usize; d];
        let mut hi = vec![0usize; d];
        let mut frac = vec![0.0; d];
        for a in 0..d {
            let ax = g.axis(a);
            let h = g.spacing(a);
            match g.boundary() {
                Boundary::Periodic => {
                    if !(x[a] >= ax.lower && x[a] < ax.upper) {
                        return None;
                    }
                    let u = (x[a] - ax.lower) / h;
                    let i = (u.floor() as usize).min(ax.points - 1);
                    lo[a] = i;
                    hi[a] = (i + 1) % ax.points;
                    frac[a] = u - i as f64;
                }
                Boundary::Dirichlet => {
                    if !(x[a] >= ax.lower && x[a] <= ax.upper) {
                        return None;
                    }
                    let u = (x[a] - ax.lower) / h;
                    let i = (u.floor() as usize).min(ax.points - 2);
                    lo[a] = i;
                    hi[a] = i + 1;
                    frac[a] = u - i as f64;
                }
            }
        }
        let mut out = Vec::with_capacity(1 << d);
        let mut idx = vec![0usize; d];
        for corner in 0..(1usize << d) {
            let mut w = 1.0;
            for a in 0..d {
                if corner >> a & 1 == 1 {
                    idx[a] = hi[a];
                    w *= frac[a];
                } else {
                    idx[a] = lo[a];
                    w *= 1.0 - frac[a];
                }
            }
            out.push((g.flat_index(&idx), w));
        }
        Some(out)
    }

    fn spatial(&self, k: usize, cell: &[(usize, f64)]) -> (Vec<f64>, bool) {
        let mut value = vec![0.0; self.components()];
        let mut total = 0.0;
        let mut near = false;
        for &(p, w) in cell {
            if self.masks[k][p] {
                near = true;
                continue;
            }
            total += w;
            for (c, v) in value.iter_mut().enumerate() {
                *v += w * self.data[k][c][p];
            }
        }
        if total > 0.0 && near {
            value.iter_mut().for_each(|v| *v /= total);
        }
        (value, near)
    }

    /// Interpolated value at (x, t); t is clamped to the recorded span.
    pub fn sample(&self, x: &[f64], t: f64) -> Option<Sample> {
        let cell = self.stencil(x)?;
        let n = self.times.len();
        if n == 1 || t <= self.times[0] {
            let (value, near_node) = self.spatial(0, &cell);
            return Some(Sample { value, near_node });
        }
        if t >= self.times[n - 1] {
            let (value, near_node) = self.spatial(n - 1, &cell);
            return Some(Sample { value, near_node });
        }
        let k = self.times.partition_point(|&s| s <= t) - 1;
        let s = (t - self.times[k]) / (self.times[k + 1] - self.times[k]);
        let (a, na) = self.spatial(k, &cell);
        let (b, nb) = self.spatial(k + 1, &cell);
        let value = a.iter().zip(&b).map(|(x, y)| (1.0 - s) * x + s * y).collect();
        Some(Sample {
            value,
            near_node: na || nb,
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrajectoryOptions {
    /// Integration step; defaults to the snapshot interval.
    pub dt: Option<f64>,
    /// End time; defaults to the last snapshot.
    pub t_end: Option<f64>,
    /// Speed bound near nodes as a multiple of the largest bulk speed in the
    /// record.
    pub speed_clamp_factor: f64,
    pub eps_node_rel: f64,
    /// Reject records whose snapshot spacing lets a particle cross more than
    /// one grid cell between snapshots.
    pub check_stride: bool,
}

impl Default for TrajectoryOptions {
    fn default() -> Self {
        Self {
            dt: None,
            t_end: None,
            speed_clamp_factor: 10.0,
            eps_node_rel: DEFAULT_NODE_REL,
            check_stride: true,
        }
    }
}

#[derive(Clone, Debug)]
pub struct Trajectory {
    pub times: Vec<f64>,
    /// Configuration point per time (all particles, axis order of the grid).
    pub positions: Vec<Vec<f64>>,
    /// P_a = m_a·v_a per time.
    pub momenta: Vec<Vec<f64>>,
    /// The velocity sample touched a node-masked cell.
    pub node_flags: Vec<bool>,
    /// The path left the grid and was cut short.
    pub truncated: bool,
}

impl Trajectory {
    pub fn node_encountered(&self) -> bool {
        self.node_flags.iter().any(|&f| f)
    }

    pub fn final_position(&self) -> &[f64] {
        self.positions.last().expect("trajectory holds its start point")
    }

    pub fn to_csv(&self, config_hash: &str) -> String {
        let d = self.positions[0].len();
        let mut header = vec!["t".to_string()];
        header.extend((0..d).map(|a| format!("x{a}")));
        header.extend((0..d).map(|a| format!("p{a}")));
        header.push("node".into());
        let header_refs: Vec<&str> = header.iter().map(String::as_str).collect();
        let mut csv = CsvBuilder::new("trajectory", config_hash, &header_refs);
        for i in 0..self.times.len() {
            let mut row = vec![fmt_f64(self.times[i])];
            row.extend(self.positions[i].iter().map(|v| fmt_f64(*v)));
            row.extend(self.momenta[i].iter().map(|v| fmt_f64(*v)));
            row.push(u8::from(self.node_flags[i]).to_string());
            csv.row(&row);
        }
        csv.finish()
    }
}

/// Points with |ψ| below this fraction of max|ψ| are excluded from the
/// reference speed used by the stride check and the node clamp.
pub const BULK_REL: f64 = 1e-3;

/// Guidance-velocity history of a record, reusable across many start points.
#[derive(Clone, Debug)]
pub struct VelocityHistory {
    field: SpaceTimeField,
    masses: Vec<f64>,
    max_speed: f64,
    interval: f64,
    stride: usize,
}

impl VelocityHistory {
    pub fn from_record(record: &EvolutionRecord, sys: &ParticleSystem, eps_node_rel: f64) -> Result<Self> {
        let mut fields = Vec::with_capacity(record.snapshots.len());
        let mut max_speed: f64 = 0.0;
        for snap in &record.snapshots {
            let v = guidance_field(snap, sys, eps_node_rel * snap.max_abs())?;
            // the current is divided by |ψ|², so speeds near the node threshold are
            // dominated by round-off; the reference speed uses the bulk only
            let bulk = BULK_REL * snap.max_abs();
            for (p, value) in snap.values().iter().enumerate() {
                if value.norm() >= bulk {
                    let speed = v.components.iter().map(|c| c.values()[p].powi(2)).sum::<f64>().sqrt();
                    max_speed = max_speed.max(speed);
                }
            }
            fields.push(v);
        }
        let grid = record.snapshots[0].grid_arc().clone();
        let field = SpaceTimeField::new(grid.clone(), record.times.clone(), fields)?;
        Ok(Self {
            masses: (0..grid.total_dim()).map(|a| sys.axis_mass(a)).collect(),
            field,
            max_speed,
            interval: record.snapshot_interval(),
            stride: record.record_stride,
        })
    }

    pub fn max_speed(&self) -> f64 {
        self.max_speed
    }

    pub fn field(&self) -> &SpaceTimeField {
        &self.field
    }

    /// max|v|·(stride·dt) must stay below the smallest grid spacing.
    pub fn validate_stride(&self) -> Result<()> {
        let travel = self.max_speed * self.interval;
        let h = self.field.grid().min_spacing();
        if travel >= h {
            return Err(Error::InvalidArgument(format!(
                "record_stride {} too coarse for trajectories: max|v|·stride·dt = {travel:e} exceeds spacing {h:e}",
                self.stride
            )));
        }
        Ok(())
    }

    fn velocity(&self, x: &[f64], t: f64, clamp: f64) -> Option<(Vec<f64>, bool)> {
        let Sample { mut value, near_node } = self.field.sample(x, t)?;
        if near_node {
            let speed = value.iter().map(|v| v * v).sum::<f64>().sqrt();
            if speed > clamp {
                value.iter_mut().for_each(|v| *v *= clamp / speed);
            }
        }
        Some((value, near_node))
    }

    /// RK4 integration of dx/dt = v(x, t) from `x0` at t = 0.
    pub fn integrate(&self, x0: &[f64], opts: &TrajectoryOptions) -> Result<Trajectory> {
        let grid = self.field.grid();
        if x0.len() != grid.total_dim() {
            return Err(Error::InvalidArgument(format!(
                "start point has {} coordinates, grid has {}",
                x0.len(),
                grid.total_dim()
            )));
        }
        if opts.check_stride {
            self.validate_stride()?;
        }
        let clamp = opts.speed_clamp_factor * self.max_speed;
        let t_end = opts.t_end.unwrap_or(*self.field.times().last().unwrap());
        let dt = opts.dt.unwrap_or(self.interval);
        if !(dt > 0.0) {
            return Err(Error::InvalidArgument(format!("trajectory dt must be positive, got {dt}")));
        }
        let (v0, near0) = self
            .velocity(x0, 0.0, clamp)
            .ok_or_else(|| Error::InvalidArgument(format!("start point {x0:?} lies outside the grid")))?;
        let mut traj = Trajectory {
            times: vec![0.0],
            positions: vec![x0.to_vec()],
            momenta: vec![self.momentum(&v0)],
            node_flags: vec![near0],
            truncated: false,
        };
        let steps = (t_end / dt).round() as usize;
        let mut x = x0.to_vec();
        let shift = |x: &[f64], k: &[f64], s: f64| -> Vec<f64> { x.iter().zip(k).map(|(a, b)| a + s * b).collect() };
        for step in 1..=steps {
            let t = (step - 1) as f64 * dt;
            let stages = (|| {
                let (k1, n1) = self.velocity(&x, t, clamp)?;
                let (k2, n2) = self.velocity(&shift(&x, &k1, 0.5 * dt), t + 0.5 * dt, clamp)?;
                let (k3, n3) = self.velocity(&shift(&x, &k2, 0.5 * dt), t + 0.5 * dt, clamp)?;
                let (k4, n4) = self.velocity(&shift(&x, &k3, dt), t + dt, clamp)?;
                Some((k1, k2, k3, k4, n1 || n2 || n3 || n4))
            })();
            let Some((k1, k2, k3, k4, near)) = stages else {
                traj.truncated = true;
                break;
            };
            let next: Vec<f64> = (0..x.len())
                .map(|a| x[a] + dt / 6.0 * (k1[a] + 2.0 * k2[a] + 2.0 * k3[a] + k4[a]))
                .collect();
            let t_new = step as f64 * dt;
            let Some((v, near_end)) = self.velocity(&next, t_new, clamp) else {
                traj.truncated = true;
                break;
            };
            x = next;
            traj.times.push(t_new);
            traj.positions.push(x.clone());
            traj.momenta.push(self.momentum(&v));
            traj.node_flags.push(near || near_end);
        }
        if traj.truncated {
            warn!("trajectory from {x0:?} left the grid at t = {}", traj.times.last().unwrap());
        }
        Ok(traj)
    }

    fn momentum(&self, v: &[f64]) -> Vec<f64> {
        v.iter().zip(&self.masses).map(|(v, m)| v * m).collect()
    }
}

pub fn integrate_trajectory(record: &EvolutionRecord, x0: &[f64], sys: &ParticleSystem) -> Result<Trajectory> {
    let opts = TrajectoryOptions::default();
    VelocityHistory::from_record(record, sys, opts.eps_node_rel)?.integrate(x0, &opts)
}

/// Total force −∇V − ∇Q over all axes for every snapshot of a record.
pub fn force_history(record: &EvolutionRecord, sys: &ParticleSystem, eps_node_rel: f64) -> Result<SpaceTimeField> {
    let mut fields = Vec::with_capacity(record.snapshots.len());
    for (snap, &t) in record.snapshots.iter().zip(&record.times) {
        let qpf = quantum_potential(snap, sys, eps_node_rel * snap.max_abs())?;
        let mut components = Vec::new();
        let mut mask = vec![false; snap.len()];
        let mut axes = Vec::new();
        for i in 0..sys.particle_count() {
            let q = quantum_force(&qpf, sys, i)?;
            let c = classical_force(snap, sys, i, t)?;
            for p in 0..mask.len() {
                mask[p] |= q.mask[p] || c.mask[p];
            }
            for (fq, fc) in q.components.into_iter().zip(c.components) {
                let grid = fq.grid_arc().clone();
                let sum = fq.values().iter().zip(fc.values()).map(|(a, b)| a + b).collect();
                components.push(crate::field::RealField::from_parts(grid, sum));
            }
            axes.extend(q.axes);
        }
        fields.push(VectorField { axes, components, mask });
    }
    SpaceTimeField::new(record.snapshots[0].grid_arc().clone(), record.times.clone(), fields)
}

/// |dP/dt − (−∇V − ∇Q)| along a trajectory, with dP/dt by central
/// differences (one-sided at the ends). Points outside the grid give NaN.
pub fn newton_residual(traj: &Trajectory, record: &EvolutionRecord, sys: &ParticleSystem) -> Result<Vec<f64>> {
    let forces = force_history(record, sys, DEFAULT_NODE_REL)?;
    Ok(newton_residual_with(traj, &forces))
}

pub fn newton_residual_with(traj: &Trajectory, forces: &SpaceTimeField) -> Vec<f64> {
    let n = traj.times.len();
    if n < 2 {
        return vec![0.0; n];
    }
    (0..n)
        .map(|i| {
            let (a, b) = if i == 0 {
                (0, 1)
            } else if i + 1 == n {
                (n - 2, n - 1)
            } else {
                (i - 1, i + 1)
            };
            let span = traj.times[b] - traj.times[a];
            let Some(f) = forces.sample(&traj.positions[i], traj.times[i]) else {
                return f64::NAN;
            };
            traj.momenta[b]
                .iter()
                .zip(&traj.momenta[a])
                .zip(&f.value)
                .map(|((pb, pa), f)| ((pb - pa) / span - f).powi(2))
                .sum::<f64>()
                .sqrt()
        })
        .collect()
}

/// Fractions of the run bounding the least-squares fit window.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FitWindow {
    pub start: f64,
    pub end: f64,
}

impl Default for FitWindow {
    fn default() -> Self {
        Self { start: 0.1, end: 1.0 }
    }
}

#[derive(Clone, Debug)]
pub struct Separation {
    pub times: Vec<f64>,
    pub log_separation: Vec<f64>,
    /// Least-squares slope of ln(separation) over the fit window.
    pub slope: f64,
    /// Either trajectory was truncated or touched a node.
    pub unreliable: bool,
    pub first: Trajectory,
    pub second: Trajectory,
}

impl Separation {
    pub fn slope_over(&self, window: FitWindow) -> f64 {
        least_squares_slope(&self.times, &self.log_separation, window)
    }
}

pub fn least_squares_slope(t: &[f64], y: &[f64], window: FitWindow) -> f64 {
    let t_max = t.last().copied().unwrap_or(0.0);
    let (lo, hi) = (window.start * t_max, window.end * t_max);
    let pts: Vec<(f64, f64)> = t
        .iter()
        .zip(y)
        .filter(|(t, y)| **t >= lo - 1e-12 && **t <= hi + 1e-12 && y.is_finite())
        .map(|(t, y)| (*t, *y))
        .collect();
    if pts.len() < 2 {
        return f64::NAN;
    }
    let n = pts.len() as f64;
    let mt = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mt) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mt).powi(2)).sum();
    if sxx == 0.0 {
        0.0
    } else {
        sxy / sxx
    }
}

pub fn trajectory_separation_with(
    history: &VelocityHistory,
    x0a: &[f64],
    x0b: &[f64],
    opts: &TrajectoryOptions,
    window: FitWindow,
) -> Result<Separation> {
    let d0 = x0a.iter().zip(x0b).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
    let limit = 10.0 * history.field().grid().min_spacing();
    if !(d0 > 0.0 && d0 < limit) {
        return Err(Error::InvalidArgument(format!(
            "initial separation {d0:e} must be positive and below 10 grid spacings ({limit:e})"
        )));
    }
    let first = history.integrate(x0a, opts)?;
    let second = history.integrate(x0b, opts)?;
    let n = first.times.len().min(second.times.len());
    let times = first.times[..n].to_vec();
    let log_separation: Vec<f64> = (0..n)
        .map(|i| {
            first.positions[i]
                .iter()
                .zip(&second.positions[i])
                .map(|(a, b)| (a - b).powi(2))
                .sum::<f64>()
                .sqrt()
                .ln()
        })
        .collect();
    let slope = least_squares_slope(&times, &log_separation, window);
    let unreliable = first.truncated || second.truncated || first.node_encountered() || second.node_encountered();
    Ok(Separation {
        times,
        log_separation,
        slope,
        unreliable,
        first,
        second,
    })
}

pub fn trajectory_separation(
    record: &EvolutionRecord,
    x0a: &[f64],
    x0b: &[f64],
    sys: &ParticleSystem,
) -> Result<Separation> {
    let opts = TrajectoryOptions::default();
    let history = VelocityHistory::from_record(record, sys, opts.eps_node_rel)?;
    trajectory_separation_with(&history, x0a, x0b, &opts, FitWindow::default())
}
