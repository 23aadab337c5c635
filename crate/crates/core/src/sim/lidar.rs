use crate::cloud::RangeImageSpec;
use crate::geom::Vec3;
use serde::{Deserialize, Serialize};

/// Scan pattern archetypes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ScanPattern {
    /// Spinning multi-ring sensor: uniform ring elevations, fixed azimuth step.
    Mechanical {
        rings: usize,
        el_min_deg: f64,
        el_max_deg: f64,
        az_step_deg: f64,
        az_min_deg: f64,
        az_max_deg: f64,
    },
    /// Raster sensor over a rectangular field of view. Rows are staggered by
    /// half a column and bent by a sinusoidal elevation warp, so the grid is
    /// dense but uneven.
    Mems {
        h_fov_deg: f64,
        v_fov_deg: f64,
        cols: usize,
        rows: usize,
        warp_deg: f64,
    },
}

impl ScanPattern {
    pub fn mechanical_128() -> Self {
        ScanPattern::Mechanical {
            rings: 128,
            el_min_deg: -16.0,
            el_max_deg: 9.0,
            az_step_deg: 0.2,
            az_min_deg: -60.0,
            az_max_deg: 60.0,
        }
    }

    pub fn mems_120x25() -> Self {
        ScanPattern::Mems {
            h_fov_deg: 120.0,
            v_fov_deg: 25.0,
            cols: 600,
            rows: 125,
            warp_deg: 0.05,
        }
    }

    /// Unit ray directions in the sensor frame (x forward, y left, z up),
    /// with their ring (row) index.
    pub fn rays(&self) -> Vec<(Vec3, u16)> {
        let dir = |az: f64, el: f64| {
            let (az, el) = (az.to_radians(), el.to_radians());
            Vec3::new(el.cos() * az.cos(), el.cos() * az.sin(), el.sin())
        };
        let mut out = Vec::new();
        match *self {
            ScanPattern::Mechanical {
                rings,
                el_min_deg,
                el_max_deg,
                az_step_deg,
                az_min_deg,
                az_max_deg,
            } => {
                let cols = ((az_max_deg - az_min_deg) / az_step_deg).round() as usize;
                for r in 0..rings {
                    let el = if rings == 1 {
                        el_min_deg
                    } else {
                        el_max_deg - (el_max_deg - el_min_deg) * r as f64 / (rings - 1) as f64
                    };
                    for c in 0..cols {
                        let az = az_max_deg - az_step_deg * (c as f64 + 0.5);
                        out.push((dir(az, el), r as u16));
                    }
                }
            }
            ScanPattern::Mems {
                h_fov_deg,
                v_fov_deg,
                cols,
                rows,
                warp_deg,
            } => {
                let (hs, vs) = (h_fov_deg / cols as f64, v_fov_deg / rows as f64);
                for r in 0..rows {
                    let stagger = if r % 2 == 0 { 0.25 } else { -0.25 };
                    for c in 0..cols {
                        let az = h_fov_deg / 2.0 - hs * (c as f64 + 0.5 + stagger);
                        let phase = 2.0 * std::f64::consts::PI * 3.0 * c as f64 / cols as f64;
                        let el = v_fov_deg / 2.0 - vs * (r as f64 + 0.5) + warp_deg * phase.sin();
                        out.push((dir(az, el), r as u16));
                    }
                }
            }
        }
        out
    }

    /// Range image grid matched to the pattern's native spacing.
    pub fn range_image_spec(&self) -> RangeImageSpec {
        match *self {
            ScanPattern::Mechanical {
                rings,
                el_min_deg,
                el_max_deg,
                az_step_deg,
                az_min_deg,
                az_max_deg,
            } => {
                let v = (el_max_deg - el_min_deg) / (rings.max(2) - 1) as f64;
                RangeImageSpec {
                    h_res_deg: az_step_deg,
                    v_res_deg: v,
                    az_min_deg,
                    az_max_deg,
                    el_min_deg: el_min_deg - v / 2.0,
                    el_max_deg: el_max_deg + v / 2.0,
                    ..Default::default()
                }
            }
            ScanPattern::Mems {
                h_fov_deg,
                v_fov_deg,
                cols,
                rows,
                ..
            } => RangeImageSpec {
                h_res_deg: h_fov_deg / cols as f64,
                v_res_deg: v_fov_deg / rows as f64,
                az_min_deg: -h_fov_deg / 2.0,
                az_max_deg: h_fov_deg / 2.0,
                el_min_deg: -v_fov_deg / 2.0,
                el_max_deg: v_fov_deg / 2.0,
                ..Default::default()
            },
        }
    }

    /// Nominal (horizontal, vertical) angular spacing in degrees.
    pub fn angular_resolution_deg(&self) -> (f64, f64) {
        let s = self.range_image_spec();
        (s.h_res_deg, s.v_res_deg)
    }
}
