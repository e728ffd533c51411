//! Path execution: a planar double-integrator robot follows a planned path
//! under a cascade PID controller with noisy position measurements, and the
//! executed trajectory is audited against the robot footprint.
//!
//! Maps are in cells; the simulation runs in meters, converting through
//! [`RobotParams::cell_size`].

mod render;

use std::fmt::Write as _;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use thiserror::Error;

use crate::gridmap::{ClearanceField, OccupancyGrid};
use crate::point::Point;
use crate::roadmap::Path;
pub use render::overlay_svg;

/// Waypoint capture radius, in cells.
pub const CAPTURE_RADIUS: f64 = 0.5;
/// Speed below which the robot counts as settled on the final waypoint, m/s.
pub const SETTLE_SPEED: f64 = 0.05;
/// How long the robot must stay captured and slow on the final waypoint, s.
pub const SETTLE_TIME: f64 = 0.5;
pub const TIMEOUT: f64 = 60.0;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RobotParams {
    /// kg
    pub mass: f64,
    /// Arm length, m.
    pub arm_length: f64,
    /// m; the default is twice the arm length.
    pub footprint_radius: f64,
    /// m/s²
    pub max_accel: f64,
    /// m per cell.
    pub cell_size: f64,
}

impl Default for RobotParams {
    fn default() -> Self {
        Self {
            mass: 0.5,
            arm_length: 0.17,
            footprint_radius: 0.34,
            // 2 N of horizontal thrust on 0.5 kg
            max_accel: 4.0,
            cell_size: 0.1,
        }
    }
}

impl RobotParams {
    pub fn validate(&self) -> Result<(), SimError> {
        let all = [
            self.mass,
            self.arm_length,
            self.footprint_radius,
            self.max_accel,
            self.cell_size,
        ];
        if all.iter().all(|v| v.is_finite() && *v > 0.0) {
            Ok(())
        } else {
            Err(SimError::InvalidParams(format!("{self:?}")))
        }
    }

    /// Clearance, in cells, below which a sample is flagged as risky.
    pub fn risk_threshold_cells(&self) -> f64 {
        self.footprint_radius / self.cell_size
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Pid {
    pub kp: f64,
    pub ki: f64,
    pub kd: f64,
}

/// Gains for both loops plus the speed limit on the outer loop's output.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PidGains {
    pub position: Pid,
    pub velocity: Pid,
    /// m/s
    pub max_speed: f64,
    /// Clamp on each integrator state.
    pub integral_limit: f64,
}

impl Default for PidGains {
    fn default() -> Self {
        Self {
            position: Pid {
                kp: 4.0,
                ki: 0.0,
                kd: 0.0,
            },
            velocity: Pid {
                kp: 10.0,
                ki: 0.5,
                kd: 0.0,
            },
            max_speed: 1.0,
            integral_limit: 1.0,
        }
    }
}

#[derive(Clone, Copy, Debug, Default)]
struct PidState {
    integral: Point,
    prev_error: Option<Point>,
}

impl PidState {
    fn step(&mut self, gains: Pid, error: Point, dt: f64, limit: f64) -> Point {
        let i = self.integral + error * dt;
        self.integral = Point::new(i.x.clamp(-limit, limit), i.y.clamp(-limit, limit));
        let deriv = self
            .prev_error
            .map_or(Point::new(0.0, 0.0), |p| (error - p) * (1.0 / dt));
        self.prev_error = Some(error);
        error * gains.kp + self.integral * gains.ki + deriv * gains.kd
    }
}

fn clamp_norm(v: Point, max: f64) -> Point {
    let n = v.norm();
    if n > max {
        v * (max / n)
    } else {
        v
    }
}

/// One simulation step. Positions and velocities in meters and m/s.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrajectorySample {
    pub t: f64,
    pub position: Point,
    pub velocity: Point,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExecutedTrajectory {
    pub dt: f64,
    pub samples: Vec<TrajectorySample>,
    /// Waypoints captured before the run ended.
    pub captured: usize,
    pub timed_out: bool,
}

impl ExecutedTrajectory {
    /// Position of sample `i` in cell coordinates.
    pub fn cell_position(&self, i: usize, cell_size: f64) -> Point {
        self.samples[i].position * (1.0 / cell_size)
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum SimError {
    #[error("cannot track an empty path")]
    EmptyPath,
    #[error("time step {0} outside (0, 0.1] s")]
    InvalidDt(f64),
    #[error("invalid robot parameters: {0}")]
    InvalidParams(String),
    #[error("tracking timed out after {TIMEOUT} s with {} of the waypoints captured", .0.captured)]
    TrackingTimeout(Box<ExecutedTrajectory>),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrackConfig {
    pub gains: PidGains,
    /// Standard deviation of the position measurement noise, m.
    pub noise_sigma: f64,
    pub dt: f64,
    pub seed: u64,
}

impl Default for TrackConfig {
    fn default() -> Self {
        Self {
            gains: PidGains::default(),
            noise_sigma: 0.0,
            dt: 0.01,
            seed: 0,
        }
    }
}

/// Flies the robot from the first waypoint through all others.
///
/// The outer loop turns the (noisy) position error into a velocity command
/// capped at `max_speed`; the inner loop turns the velocity error into an
/// acceleration capped at `max_accel`. Capture checks use the true position.
/// Ends once the robot has stayed within capture range of the last waypoint
/// below [`SETTLE_SPEED`] for [`SETTLE_TIME`], or after [`TIMEOUT`] seconds.
/// A robot already at rest on a single-waypoint path ends at t = 0.
pub fn track(path: &Path, robot: &RobotParams, config: &TrackConfig) -> Result<ExecutedTrajectory, SimError> {
    robot.validate()?;
    if !(config.dt > 0.0 && config.dt <= 0.1) {
        return Err(SimError::InvalidDt(config.dt));
    }
    if path.waypoints.is_empty() {
        return Err(SimError::EmptyPath);
    }
    let noise = Normal::new(0.0, config.noise_sigma.max(0.0)).map_err(|e| SimError::InvalidParams(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let to_m = |p: Point| p * robot.cell_size;
    let waypoints: Vec<Point> = path.waypoints.iter().map(|&p| to_m(p)).collect();
    let capture = CAPTURE_RADIUS * robot.cell_size;
    let gains = config.gains;

    let mut pos = waypoints[0];
    let mut vel = Point::new(0.0, 0.0);
    let mut target = 1.min(waypoints.len() - 1);
    let mut pos_pid = PidState::default();
    let mut vel_pid = PidState::default();
    let mut samples = vec![TrajectorySample {
        t: 0.0,
        position: pos,
        velocity: vel,
    }];
    let max_steps = (TIMEOUT / config.dt).round() as usize;
    let settle_steps = (SETTLE_TIME / config.dt).ceil() as usize;
    let mut settled = 0usize;

    for step in 1..=max_steps + 1 {
        // advance through every waypoint already within reach
        while target + 1 < waypoints.len() && pos.distance(waypoints[target]) <= capture {
            target += 1;
        }
        let last = target + 1 == waypoints.len();
        if last && pos.distance(waypoints[target]) <= capture && vel.norm() < SETTLE_SPEED {
            settled += 1;
        } else {
            settled = 0;
        }
        if settled > settle_steps || (settled > 0 && waypoints.len() == 1 && step == 1) {
            return Ok(ExecutedTrajectory {
                dt: config.dt,
                samples,
                captured: waypoints.len(),
                timed_out: false,
            });
        }
        if step > max_steps {
            break;
        }
        let measured = pos + Point::new(noise.sample(&mut rng), noise.sample(&mut rng));
        let v_cmd = clamp_norm(
            pos_pid.step(
                gains.position,
                waypoints[target] - measured,
                config.dt,
                gains.integral_limit,
            ),
            gains.max_speed,
        );
        let a_cmd = clamp_norm(
            vel_pid.step(gains.velocity, v_cmd - vel, config.dt, gains.integral_limit),
            robot.max_accel,
        );
        vel = vel + a_cmd * config.dt;
        pos = pos + vel * config.dt;
        samples.push(TrajectorySample {
            t: step as f64 * config.dt,
            position: pos,
            velocity: vel,
        });
    }
    Err(SimError::TrackingTimeout(Box::new(ExecutedTrajectory {
        dt: config.dt,
        samples,
        captured: target,
        timed_out: true,
    })))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Flag {
    Safe,
    Risk,
    Collision,
}

impl Flag {
    pub fn as_str(self) -> &'static str {
        match self {
            Flag::Safe => "safe",
            Flag::Risk => "risk",
            Flag::Collision => "collision",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RiskReport {
    /// Clearance at each sample, cells.
    pub clearance: Vec<f64>,
    pub flags: Vec<Flag>,
    /// Samples whose footprint overlaps an obstacle, collisions included.
    pub risk_count: usize,
    pub collision_count: usize,
}

impl RiskReport {
    pub fn risk_fraction(&self) -> f64 {
        self.risk_count as f64 / self.flags.len().max(1) as f64
    }

    pub fn collision_fraction(&self) -> f64 {
        self.collision_count as f64 / self.flags.len().max(1) as f64
    }
}

/// Flags every sample whose clearance is below the footprint radius (risk)
/// or zero, which happens inside an occupied cell (collision).
pub fn audit_collisions(
    traj: &ExecutedTrajectory,
    grid: &OccupancyGrid,
    field: &ClearanceField,
    robot: &RobotParams,
) -> RiskReport {
    let threshold = robot.risk_threshold_cells();
    let mut report = RiskReport {
        clearance: Vec::with_capacity(traj.samples.len()),
        flags: Vec::with_capacity(traj.samples.len()),
        risk_count: 0,
        collision_count: 0,
    };
    for i in 0..traj.samples.len() {
        let c = field.sample_in(grid, traj.cell_position(i, robot.cell_size));
        let flag = if c <= 0.0 {
            Flag::Collision
        } else if c < threshold {
            Flag::Risk
        } else {
            Flag::Safe
        };
        report.risk_count += (flag != Flag::Safe) as usize;
        report.collision_count += (flag == Flag::Collision) as usize;
        report.clearance.push(c);
        report.flags.push(flag);
    }
    report
}

/// `t,x,y,vx,vy,clearance,flag` with positions in m, velocities in m/s and
/// clearance in cells.
pub fn trajectory_csv(traj: &ExecutedTrajectory, report: &RiskReport) -> String {
    let mut s = String::from("t,x,y,vx,vy,clearance,flag\n");
    for (i, smp) in traj.samples.iter().enumerate() {
        let _ = writeln!(
            s,
            "{:.4},{:.6},{:.6},{:.6},{:.6},{:.6},{}",
            smp.t,
            smp.position.x,
            smp.position.y,
            smp.velocity.x,
            smp.velocity.y,
            report.clearance[i],
            report.flags[i].as_str()
        );
    }
    s
}
