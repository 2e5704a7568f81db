//! Network geometry and large-scale fading.
//!
//! APs and users are dropped uniformly on a square of side `area_side_km`.
//! With wrap-around enabled the square is treated as a torus, so every link
//! uses the shortest of the nine translated images of the far end.

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }
}

/// Draws `count` points with i.i.d. uniform coordinates on `[0, side)`.
pub fn place_uniform<R: Rng + ?Sized>(count: usize, area_side_km: f64, rng: &mut R) -> Result<Vec<Point>> {
    if count == 0 {
        return Err(Error::invalid("place_uniform: count must be at least 1"));
    }
    if !(area_side_km > 0.0) {
        return Err(Error::invalid(format!("place_uniform: area side {area_side_km} must be positive")));
    }
    Ok((0..count)
        .map(|_| {
            let x = rng.gen::<f64>() * area_side_km;
            let y = rng.gen::<f64>() * area_side_km;
            Point::new(x, y)
        })
        .collect())
}

/// Distance from `p` to the nearest of the nine images of `q` on the torus.
pub fn wrap_distance(p: Point, q: Point, area_side_km: f64) -> f64 {
    let mut best = f64::INFINITY;
    for dx in [-area_side_km, 0.0, area_side_km] {
        for dy in [-area_side_km, 0.0, area_side_km] {
            let d = (p.x - q.x - dx).hypot(p.y - q.y - dy);
            best = best.min(d);
        }
    }
    best
}

fn euclidean(p: Point, q: Point) -> f64 {
    (p.x - q.x).hypot(p.y - q.y)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NetworkLayout {
    pub area_side_km: f64,
    pub ap_positions: Vec<Point>,
    pub ue_positions: Vec<Point>,
    pub wrap_around: bool,
}

impl NetworkLayout {
    pub fn new(area_side_km: f64, ap_positions: Vec<Point>, ue_positions: Vec<Point>, wrap_around: bool) -> Result<Self> {
        if ap_positions.is_empty() || ue_positions.is_empty() {
            return Err(Error::invalid("layout needs at least one AP and one user"));
        }
        let inside = |p: &Point| (0.0..area_side_km).contains(&p.x) && (0.0..area_side_km).contains(&p.y);
        if !ap_positions.iter().chain(&ue_positions).all(inside) {
            return Err(Error::invalid("layout point outside the simulation square"));
        }
        Ok(NetworkLayout { area_side_km, ap_positions, ue_positions, wrap_around })
    }

    /// Uniform drop of `n_aps` APs and `n_users` users from two separate streams.
    pub fn generate<R: Rng + ?Sized>(
        n_aps: usize,
        n_users: usize,
        area_side_km: f64,
        wrap_around: bool,
        ap_rng: &mut R,
        ue_rng: &mut R,
    ) -> Result<Self> {
        let aps = place_uniform(n_aps, area_side_km, ap_rng)?;
        let ues = place_uniform(n_users, area_side_km, ue_rng)?;
        NetworkLayout::new(area_side_km, aps, ues, wrap_around)
    }

    pub fn n_aps(&self) -> usize {
        self.ap_positions.len()
    }

    pub fn n_users(&self) -> usize {
        self.ue_positions.len()
    }

    /// AP `l` to user `k` distance in km.
    pub fn distance(&self, l: usize, k: usize) -> f64 {
        let (p, q) = (self.ap_positions[l], self.ue_positions[k]);
        if self.wrap_around {
            wrap_distance(p, q, self.area_side_km)
        } else {
            euclidean(p, q)
        }
    }
}

/// Path-loss constant of the three-slope model (dB), with `f` in MHz.
pub fn path_loss_constant(f_mhz: f64, h_ap_m: f64, h_ue_m: f64) -> Result<f64> {
    if !(f_mhz > 0.0 && h_ap_m > 0.0 && h_ue_m > 0.0) {
        return Err(Error::invalid(format!(
            "path_loss_constant: arguments must be positive (f={f_mhz}, h_ap={h_ap_m}, h_ue={h_ue_m})"
        )));
    }
    let lf = f_mhz.log10();
    Ok(46.3 + 33.9 * lf - 13.83 * h_ap_m.log10() - (1.1 * lf - 0.7) * h_ue_m + (1.56 * lf - 0.8))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathLossParams {
    pub d0_km: f64,
    pub d1_km: f64,
    pub carrier_freq_mhz: f64,
    pub h_ap_m: f64,
    pub h_ue_m: f64,
    pub l_const_db: f64,
}

impl PathLossParams {
    pub fn new(d0_km: f64, d1_km: f64, carrier_freq_mhz: f64, h_ap_m: f64, h_ue_m: f64) -> Result<Self> {
        if !(0.0 < d0_km && d0_km < d1_km) {
            return Err(Error::invalid(format!("breakpoints must satisfy 0 < d0 < d1 (d0={d0_km}, d1={d1_km})")));
        }
        let l_const_db = path_loss_constant(carrier_freq_mhz, h_ap_m, h_ue_m)?;
        Ok(PathLossParams { d0_km, d1_km, carrier_freq_mhz, h_ap_m, h_ue_m, l_const_db })
    }
}

/// Three-slope path loss in dB (a negative number).
pub fn path_loss_db(d_km: f64, params: &PathLossParams) -> f64 {
    let PathLossParams { d0_km, d1_km, l_const_db, .. } = *params;
    if d_km > d1_km {
        -l_const_db - 35.0 * d_km.log10()
    } else if d_km > d0_km {
        -l_const_db - 15.0 * d1_km.log10() - 20.0 * d_km.log10()
    } else {
        -l_const_db - 15.0 * d1_km.log10() - 20.0 * d0_km.log10()
    }
}

#[derive(Debug, Clone)]
pub struct LargeScaleFading {
    /// Linear power gains, L×K.
    pub beta: DMatrix<f64>,
    pub pl_db: DMatrix<f64>,
    pub shadow_db: DMatrix<f64>,
    pub sigma_sh_db: f64,
}

/// Path loss plus i.i.d. log-normal shadowing for every AP/user pair.
///
/// One standard normal is drawn per link in AP-major order whether or not it is
/// used, so the stream position never depends on `shadow_inside_d1`.
pub fn large_scale_fading<R: Rng + ?Sized>(
    layout: &NetworkLayout,
    params: &PathLossParams,
    sigma_sh_db: f64,
    shadow_inside_d1: bool,
    rng: &mut R,
) -> LargeScaleFading {
    let (l_count, k_count) = (layout.n_aps(), layout.n_users());
    let mut pl_db = DMatrix::zeros(l_count, k_count);
    let mut shadow_db = DMatrix::zeros(l_count, k_count);
    for l in 0..l_count {
        for k in 0..k_count {
            let d = layout.distance(l, k);
            let z: f64 = rng.sample(StandardNormal);
            pl_db[(l, k)] = path_loss_db(d, params);
            shadow_db[(l, k)] = if shadow_inside_d1 || d > params.d1_km { sigma_sh_db * z } else { 0.0 };
        }
    }
    let beta = (&pl_db + &shadow_db).map(|db| 10f64.powf(db / 10.0));
    LargeScaleFading { beta, pl_db, shadow_db, sigma_sh_db }
}
