//! Quadrature grids on the sphere.
//!
//! The sphere is split between the two charts at `|z| = 1` without double
//! counting. Each chart disk is covered by one of three layouts:
//!
//! * a plain polar grid when the chart contains no anchor zero;
//! * a log-radial polar grid over the whole disk when the chart's only zero
//!   sits at its origin (the common case for diagonal degenerations): radial
//!   nodes are uniform per decade of `ln r` from the rim down to
//!   `inner_margin · t_min^{m_1}`, below the deepest transition layer, plus a
//!   small linear patch covering the remaining core;
//! * recentered log-polar subgrids under a smooth partition of unity for
//!   off-center zeroes, with the background grid masked by the complement.
//!
//! Angular integration is a phase-offset trapezoid rule (spectrally accurate
//! for the periodic integrands here); radial panels use 8-point
//! Gauss-Legendre, sized so the configured node density per decade is met.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::QuadratureError;
use crate::predictor::Chart;

/// 8-point Gauss-Legendre rule on [-1, 1].
const GL8: [(f64, f64); 8] = [
    (-0.960_289_856_497_536_2, 0.101_228_536_290_376_26),
    (-0.796_666_477_413_626_7, 0.222_381_034_453_374_47),
    (-0.525_532_409_916_329_0, 0.313_706_645_877_887_3),
    (-0.183_434_642_495_649_8, 0.362_683_783_378_362_0),
    (0.183_434_642_495_649_8, 0.362_683_783_378_362_0),
    (0.525_532_409_916_329_0, 0.313_706_645_877_887_3),
    (0.796_666_477_413_626_7, 0.222_381_034_453_374_47),
    (0.960_289_856_497_536_2, 0.101_228_536_290_376_26),
];

/// Applies `f(node, weight)` over `panels` equal Gauss-Legendre panels
/// spanning `[a, b]`.
pub fn for_each_gauss_node(a: f64, b: f64, panels: usize, mut f: impl FnMut(f64, f64)) {
    let h = (b - a) / panels as f64;
    for p in 0..panels {
        let mid = a + (p as f64 + 0.5) * h;
        let half = 0.5 * h;
        for (x, w) in GL8 {
            f(mid + half * x, half * w);
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GridParams {
    pub angular_nodes: usize,
    pub radial_nodes_per_decade: usize,
    pub inner_margin: f64,
    /// Smallest `t` the grid is built to resolve. Defaults to the smallest
    /// scheduled `t`; sampling below it fails with `GridUnresolved`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub design_t_min: Option<f64>,
}

impl Default for GridParams {
    fn default() -> Self {
        Self {
            angular_nodes: 64,
            radial_nodes_per_decade: 48,
            inner_margin: 1e-2,
            design_t_min: None,
        }
    }
}

pub(crate) fn panels_per_decade(params: &GridParams) -> usize {
    params.radial_nodes_per_decade.div_ceil(GL8.len()).max(1)
}

/// One anchor zero as the grid builder sees it.
#[derive(Debug, Clone, PartialEq)]
pub struct ZeroInfo {
    pub chart: Chart,
    pub location: Complex64,
    /// Steepest diagram slope `m_1` at this zero; 0 for a trivial diagram.
    pub max_slope: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridNode {
    pub chart: Chart,
    pub z: Complex64,
    /// Lebesgue area weight in the node's chart coordinate (partition-of-
    /// unity factors folded in).
    pub weight: f64,
}

#[derive(Debug, Clone)]
pub struct QuadratureGrid {
    nodes: Vec<GridNode>,
    design_t_min: f64,
    params: GridParams,
}

enum ChartPlan {
    Plain,
    CenteredLog(usize),
    General(Vec<usize>),
}

impl QuadratureGrid {
    pub fn build(
        zeroes: &[ZeroInfo],
        params: &GridParams,
        design_t_min: f64,
    ) -> Result<Self, QuadratureError> {
        if !(design_t_min > 0.0 && design_t_min <= 1.0) {
            return Err(QuadratureError::InvalidSchedule(format!(
                "design t_min = {design_t_min} is outside (0, 1]"
            )));
        }
        if params.angular_nodes < 4
            || params.radial_nodes_per_decade == 0
            || !(params.inner_margin > 0.0 && params.inner_margin < 0.5)
        {
            return Err(QuadratureError::InvalidSchedule(format!(
                "grid parameters out of range: {params:?}"
            )));
        }

        // Bump radii each zero would get under partition-of-unity treatment.
        let radii: Vec<f64> = zeroes
            .iter()
            .enumerate()
            .map(|(i, z)| {
                let mut r = 0.3_f64;
                for (j, other) in zeroes.iter().enumerate() {
                    if j != i && other.chart == z.chart {
                        r = r.min(0.45 * (other.location - z.location).norm());
                    }
                }
                r
            })
            .collect();
        // A bump crossing the chart seam forces the partition-of-unity
        // layout everywhere, so no region is counted twice.
        let crosses_seam = zeroes
            .iter()
            .zip(&radii)
            .any(|(z, &r)| z.location.norm() + r > 1.0);

        let mut bump_set: Vec<usize> = Vec::new();
        let mut plans = Vec::new();
        for chart in [Chart::Standard, Chart::Infinity] {
            let mine: Vec<usize> = zeroes
                .iter()
                .enumerate()
                .filter(|(_, z)| z.chart == chart)
                .map(|(i, _)| i)
                .collect();
            let plan = if crosses_seam {
                ChartPlan::General(mine)
            } else if mine.is_empty() {
                ChartPlan::Plain
            } else if mine.len() == 1 && zeroes[mine[0]].location.norm() < 1e-9 {
                ChartPlan::CenteredLog(mine[0])
            } else {
                ChartPlan::General(mine)
            };
            if let ChartPlan::General(ref idxs) = plan {
                bump_set.extend(idxs.iter().copied());
            }
            plans.push((chart, plan));
        }

        let mut nodes = Vec::new();
        for (chart, plan) in &plans {
            match plan {
                ChartPlan::Plain => {
                    push_linear_disk(*chart, params, None, &mut nodes);
                }
                ChartPlan::CenteredLog(i) => {
                    let r_min = inner_radius(zeroes[*i].max_slope, design_t_min, params, 1.0);
                    push_log_polar_disk(
                        *chart,
                        Complex64::ZERO,
                        r_min,
                        1.0,
                        params,
                        None,
                        &mut nodes,
                    );
                }
                ChartPlan::General(idxs) => {
                    for &i in idxs {
                        let r_out = radii[i];
                        let r_min =
                            inner_radius(zeroes[i].max_slope, design_t_min, params, r_out);
                        push_log_polar_disk(
                            *chart,
                            zeroes[i].location,
                            r_min,
                            r_out,
                            params,
                            Some(r_out),
                            &mut nodes,
                        );
                    }
                    let mask = |chart: Chart, z: Complex64| -> f64 {
                        let mut m = 1.0;
                        for &i in &bump_set {
                            m -= bump_at(&zeroes[i], radii[i], chart, z);
                        }
                        m.max(0.0)
                    };
                    push_linear_disk(*chart, params, Some(&mask), &mut nodes);
                }
            }
        }

        Ok(Self {
            nodes,
            design_t_min,
            params: *params,
        })
    }

    pub fn nodes(&self) -> &[GridNode] {
        &self.nodes
    }

    pub fn design_t_min(&self) -> f64 {
        self.design_t_min
    }

    pub fn params(&self) -> &GridParams {
        &self.params
    }

    /// Number of distinct node radii around `center` with `r_lo <= r < r_hi`
    /// (used to check that every annulus is resolved).
    pub fn radial_nodes_in_annulus(
        &self,
        chart: Chart,
        center: Complex64,
        r_lo: f64,
        r_hi: f64,
    ) -> usize {
        let mut radii: Vec<f64> = self
            .nodes
            .iter()
            .filter(|n| n.chart == chart)
            .map(|n| (n.z - center).norm())
            .filter(|r| *r >= r_lo && *r < r_hi)
            .collect();
        radii.sort_by(f64::total_cmp);
        radii.dedup_by(|a, b| (*a - *b).abs() < 1e-14 * (*a + *b));
        radii.len()
    }
}

fn inner_radius(max_slope: f64, t_min: f64, params: &GridParams, r_out: f64) -> f64 {
    let layer = t_min.powf(max_slope);
    (params.inner_margin * layer)
        .clamp(1e-280, 0.25)
        .min(r_out * 1e-2)
}

/// C-infinity step: 0 for x <= 0, 1 for x >= 1.
fn smooth_step(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else if x >= 1.0 {
        1.0
    } else {
        let a = (-1.0 / x).exp();
        let b = (-1.0 / (1.0 - x)).exp();
        a / (a + b)
    }
}

/// Radial bump: 1 inside `radius/4`, 0 outside `radius`, with a wide
/// transition band so moderate grids resolve it.
fn bump_profile(r: f64, radius: f64) -> f64 {
    smooth_step((radius - r) / (0.75 * radius))
}

/// Bump of a zero evaluated at a point given in an arbitrary chart.
fn bump_at(zero: &ZeroInfo, radius: f64, chart: Chart, z: Complex64) -> f64 {
    let dist = if chart == zero.chart {
        (z - zero.location).norm()
    } else if z == Complex64::ZERO {
        return 0.0; // the other chart's origin is infinitely far
    } else {
        (z.inv() - zero.location).norm()
    };
    bump_profile(dist, radius)
}

fn angular_nodes(params: &GridParams) -> impl Iterator<Item = (f64, f64)> {
    let n = params.angular_nodes;
    let dtheta = std::f64::consts::TAU / n as f64;
    (0..n).map(move |k| ((k as f64 + 0.5) * dtheta, dtheta))
}

/// Polar grid over the disk `|z - center| <= r_out`, log-radial on
/// `[r_min, r_out]` plus a linear core patch on `[0, r_min]`.
fn push_log_polar_disk(
    chart: Chart,
    center: Complex64,
    r_min: f64,
    r_out: f64,
    params: &GridParams,
    bump_radius: Option<f64>,
    nodes: &mut Vec<GridNode>,
) {
    let decades = (r_out / r_min).log10();
    let panels = ((decades * panels_per_decade(params) as f64).ceil() as usize).max(1);
    let mut radial: Vec<(f64, f64)> = Vec::new(); // (r, radial weight: w * r dr-factor)
    for_each_gauss_node(r_min.ln(), r_out.ln(), panels, |s, w| {
        let r = s.exp();
        radial.push((r, w * r * r)); // dA = r dr dθ = r² ds dθ
    });
    for_each_gauss_node(0.0, r_min, 2, |r, w| {
        radial.push((r, w * r));
    });
    for (theta, w_theta) in angular_nodes(params) {
        let dir = Complex64::from_polar(1.0, theta);
        for &(r, w_r) in &radial {
            let scale = match bump_radius {
                Some(radius) => bump_profile(r, radius),
                None => 1.0,
            };
            if scale == 0.0 {
                continue;
            }
            nodes.push(GridNode {
                chart,
                z: center + r * dir,
                weight: w_r * w_theta * scale,
            });
        }
    }
}

/// Plain polar grid over the unit disk of a chart, optionally masked.
fn push_linear_disk(
    chart: Chart,
    params: &GridParams,
    mask: Option<&dyn Fn(Chart, Complex64) -> f64>,
    nodes: &mut Vec<GridNode>,
) {
    // Masked backgrounds must resolve the partition shells, so densify both
    // directions there.
    let panels = panels_per_decade(params).max(6) * if mask.is_some() { 3 } else { 1 };
    let mut radial: Vec<(f64, f64)> = Vec::new();
    for_each_gauss_node(0.0, 1.0, panels, |r, w| {
        radial.push((r, w * r));
    });
    let ang_params = GridParams {
        angular_nodes: if mask.is_some() {
            params.angular_nodes * 4
        } else {
            params.angular_nodes
        },
        ..*params
    };
    for (theta, w_theta) in angular_nodes(&ang_params) {
        let dir = Complex64::from_polar(1.0, theta);
        for &(r, w_r) in &radial {
            let z = r * dir;
            let scale = match mask {
                Some(m) => m(chart, z),
                None => 1.0,
            };
            if scale == 0.0 {
                continue;
            }
            nodes.push(GridNode {
                chart,
                z,
                weight: w_r * w_theta * scale,
            });
        }
    }
}
