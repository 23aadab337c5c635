use super::{Cluster, GroundMask, PointCloud, RangeImage};
use crate::geom::Vec3;
use std::collections::HashMap;

/// Directions of the scan rays that border a cluster but did not hit it.
///
/// For every cluster return, the four lattice neighbours one image step
/// away are examined. A neighbour counts as a miss when no cluster return
/// lies there and the ray either returned nothing, hit ground, or hit
/// something farther than the cluster. A gap with cluster returns again one
/// step further on is a dropout hole, not an edge, and is skipped. Rays
/// stopped short by a non-ground object closer than `occluder_gap_m` could
/// have hit the cluster behind it, so they are left out, as are neighbours
/// beyond the image window.
///
/// Together with the returns these bracket every visible edge of a planar
/// target to within one scan step per crossing.
pub fn fringe_rays(
    img: &RangeImage,
    cloud: &PointCloud,
    ground: &GroundMask,
    cluster: &Cluster,
    occluder_gap_m: f64,
) -> Vec<Vec3> {
    let spec = &img.spec;
    let wraps = spec.wraps();
    let cols = img.cols as f64;
    let coords: Vec<(f64, f64)> = cluster
        .point_indices
        .iter()
        .map(|&i| spec.image_coords(&cloud.points[i as usize]))
        .collect();
    let key = |r: f64, c: f64| (r.floor() as i64, c.floor() as i64);
    let mut buckets: HashMap<(i64, i64), Vec<(f64, f64)>> = HashMap::new();
    for &(r, c) in &coords {
        buckets.entry(key(r, c)).or_default().push((r, c));
    }
    let near = |a: (f64, f64), b: (f64, f64)| {
        let mut dc = (a.1 - b.1).abs();
        if wraps {
            dc = dc.min(cols - dc);
        }
        // Rows of some patterns are staggered by half a column.
        (a.0 - b.0).abs() < 0.5 && dc < 0.75
    };
    let wrap_col = |c: i64| {
        if wraps {
            c.rem_euclid(img.cols as i64)
        } else {
            c
        }
    };

    let mut rays = Vec::new();
    for (&i, &(r, c)) in cluster.point_indices.iter().zip(&coords) {
        let range = cloud.points[i as usize].norm();
        for (dr, dc) in [(-1.0, 0.0), (1.0, 0.0), (0.0, -1.0), (0.0, 1.0)] {
            let mut q = (r + dr, c + dc);
            if wraps {
                q.1 = q.1.rem_euclid(cols);
            }
            if q.0 < 0.0 || q.0 >= img.rows as f64 || q.1 < 0.0 || q.1 >= cols {
                continue;
            }
            let beyond = (
                q.0 + dr,
                if wraps {
                    (q.1 + dc).rem_euclid(cols)
                } else {
                    q.1 + dc
                },
            );
            let covered_at = |p: (f64, f64)| {
                let (kr, kc) = key(p.0, p.1);
                (kr - 1..=kr + 1).any(|nr| {
                    (kc - 1..=kc + 1).any(|nc| {
                        buckets
                            .get(&(nr, wrap_col(nc)))
                            .is_some_and(|b| b.iter().any(|&x| near(x, p)))
                    })
                })
            };
            if covered_at(q) || covered_at(beyond) {
                continue;
            }
            let (kr, kc) = key(q.0, q.1);
            let mut occluded = false;
            for nr in kr - 1..=kr + 1 {
                for nc in kc - 1..=kc + 1 {
                    let nc = wrap_col(nc);
                    if nr < 0 || nc < 0 || nr >= img.rows as i64 || nc >= img.cols as i64 {
                        continue;
                    }
                    let cell = img.cell(nr as usize, nc as usize);
                    for &j in &cell.point_indices {
                        let p = &cloud.points[j as usize];
                        if near(spec.image_coords(p), q)
                            && !ground.point_is_ground[j as usize]
                            && p.norm() < range - occluder_gap_m
                        {
                            occluded = true;
                        }
                    }
                }
            }
            if !occluded {
                rays.push(spec.direction_at(q.0, q.1));
            }
        }
    }
    rays
}
