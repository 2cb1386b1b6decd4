//! Structured meshes of 6-node triangles for straight beams and circular arches.
//!
//! Nodes live on a `(2nx+1) × (2ny+1)` lattice numbered with the through-
//! thickness index running fastest, which keeps the stiffness profile narrow.
//! Each lattice cell of 3×3 nodes is split along its `(0,0)–(1,1)` diagonal.
//! Element connectivity lists the three corners counterclockwise followed by
//! the midsides of edges 0–1, 1–2 and 2–0.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::f64::consts::FRAC_PI_2;
#[allow(unused_imports)]
use num_traits::Float;

use crate::{Error, Result};

/// Boundary edge of a quadratic element: `[corner, midside, corner]`.
pub type Edge = [usize; 3];

#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    pub nodes: Vec<[f64; 2]>,
    pub elements: Vec<[usize; 6]>,
    pub edge_sets: BTreeMap<String, Vec<Edge>>,
    pub node_sets: BTreeMap<String, Vec<usize>>,
}

/// How the nominal span of an arch is measured.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ArchSpan {
    /// Straight-line distance between the ends of the lower surface.
    #[default]
    Chord,
    /// Arc length of the lower surface.
    ArcLength,
}

/// Node query for [`select_nodes`].
#[derive(Debug, Clone, PartialEq)]
pub enum NodeSelector<'a> {
    /// Closed axis-aligned box `[x0, x1] × [y0, y1]`.
    Box { x: [f64; 2], y: [f64; 2] },
    /// A named edge set (or node set of the same name).
    Set(&'a str),
}

const SIDES: [&str; 4] = ["left", "right", "bottom", "top"];

impl Mesh {
    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn element_count(&self) -> usize {
        self.elements.len()
    }

    /// Twice the signed area of the corner triangle of element `e`.
    pub fn corner_cross(&self, e: usize) -> f64 {
        let [a, b, c, ..] = self.elements[e];
        let (pa, pb, pc) = (self.nodes[a], self.nodes[b], self.nodes[c]);
        (pb[0] - pa[0]) * (pc[1] - pa[1]) - (pc[0] - pa[0]) * (pb[1] - pa[1])
    }

    /// Diagonal of the axis-aligned bounding box.
    pub fn bounding_diagonal(&self) -> f64 {
        let mut lo = [f64::INFINITY; 2];
        let mut hi = [f64::NEG_INFINITY; 2];
        for p in &self.nodes {
            for k in 0..2 {
                lo[k] = lo[k].min(p[k]);
                hi[k] = hi[k].max(p[k]);
            }
        }
        ((hi[0] - lo[0]).powi(2) + (hi[1] - lo[1]).powi(2)).sqrt()
    }

    /// Checks orientation, straight edges, index bounds and node uniqueness.
    pub fn validate(&self) -> Result<()> {
        let n = self.nodes.len();
        for (e, el) in self.elements.iter().enumerate() {
            if el.iter().any(|&i| i >= n) {
                return Err(Error::invalid("element references a node out of range"));
            }
            let cross = self.corner_cross(e);
            if cross <= 0.0 {
                return Err(Error::DegenerateElement {
                    element: e,
                    det: cross,
                });
            }
            for (m, (a, b)) in [(3, (0, 1)), (4, (1, 2)), (5, (2, 0))] {
                let (pa, pb, pm) = (self.nodes[el[a]], self.nodes[el[b]], self.nodes[el[m]]);
                for k in 0..2 {
                    if (pm[k] - 0.5 * (pa[k] + pb[k])).abs() > 1e-12 {
                        return Err(Error::invalid("midside node off its edge midpoint"));
                    }
                }
            }
        }
        let mut sorted: Vec<usize> = (0..n).collect();
        sorted.sort_by(|&a, &b| self.nodes[a][0].total_cmp(&self.nodes[b][0]));
        for w in 0..n {
            let pa = self.nodes[sorted[w]];
            for &j in &sorted[w + 1..] {
                let pb = self.nodes[j];
                if pb[0] - pa[0] > 1e-12 {
                    break;
                }
                if (pb[1] - pa[1]).abs() <= 1e-12 {
                    return Err(Error::invalid("duplicate nodes"));
                }
            }
        }
        Ok(())
    }

    /// Nearest node to `p` (lowest index on ties).
    pub fn nearest_node(&self, p: [f64; 2]) -> Option<usize> {
        let dist = |q: &[f64; 2]| (q[0] - p[0]).powi(2) + (q[1] - p[1]).powi(2);
        (0..self.nodes.len()).min_by(|&a, &b| dist(&self.nodes[a]).total_cmp(&dist(&self.nodes[b])))
    }
}

fn check_counts(nx: usize, ny: usize) -> Result<()> {
    if nx == 0 || ny == 0 {
        return Err(Error::invalid("element counts must be at least 1"));
    }
    Ok(())
}

fn check_positive(name: &str, v: f64) -> Result<()> {
    if !(v > 0.0 && v.is_finite()) {
        return Err(Error::InvalidArgument(alloc::format!(
            "{name} must be positive and finite"
        )));
    }
    Ok(())
}

/// Builds the lattice from a map of normalized coordinates `(s, η) ∈ [0,1]²`
/// for the corner nodes; all other nodes sit at corner midpoints.
fn structured<F: Fn(f64, f64) -> [f64; 2]>(nx: usize, ny: usize, map: F) -> Mesh {
    let (cols, rows) = (2 * nx + 1, 2 * ny + 1);
    let id = |i: usize, j: usize| i * rows + j;
    let mut nodes = alloc::vec![[0.0; 2]; cols * rows];
    for i in (0..cols).step_by(2) {
        for j in (0..rows).step_by(2) {
            nodes[id(i, j)] = map(i as f64 / (cols - 1) as f64, j as f64 / (rows - 1) as f64);
        }
    }
    let mid = |a: [f64; 2], b: [f64; 2]| [0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])];
    for i in 0..cols {
        for j in 0..rows {
            nodes[id(i, j)] = match (i % 2, j % 2) {
                (0, 0) => continue,
                (1, 0) => mid(nodes[id(i - 1, j)], nodes[id(i + 1, j)]),
                (0, 1) => mid(nodes[id(i, j - 1)], nodes[id(i, j + 1)]),
                _ => mid(nodes[id(i - 1, j - 1)], nodes[id(i + 1, j + 1)]),
            };
        }
    }

    let mut elements = Vec::with_capacity(2 * nx * ny);
    for ex in 0..nx {
        for ey in 0..ny {
            let (i, j) = (2 * ex, 2 * ey);
            let n00 = id(i, j);
            let n10 = id(i + 2, j);
            let n11 = id(i + 2, j + 2);
            let n01 = id(i, j + 2);
            let centre = id(i + 1, j + 1);
            elements.push([n00, n10, n11, id(i + 1, j), id(i + 2, j + 1), centre]);
            elements.push([n00, n11, n01, centre, id(i + 1, j + 2), id(i, j + 1)]);
        }
    }

    let mut edge_sets = BTreeMap::new();
    let along_x = |j: usize| {
        (0..nx)
            .map(|e| [id(2 * e, j), id(2 * e + 1, j), id(2 * e + 2, j)])
            .collect::<Vec<_>>()
    };
    let along_y = |i: usize| {
        (0..ny)
            .map(|e| [id(i, 2 * e), id(i, 2 * e + 1), id(i, 2 * e + 2)])
            .collect::<Vec<_>>()
    };
    edge_sets.insert("bottom".to_string(), along_x(0));
    edge_sets.insert("top".to_string(), along_x(rows - 1));
    edge_sets.insert("left".to_string(), along_y(0));
    edge_sets.insert("right".to_string(), along_y(cols - 1));

    let mut node_sets = BTreeMap::new();
    for name in SIDES {
        let mut ids: Vec<usize> = edge_sets[name].iter().flatten().copied().collect();
        ids.sort_unstable();
        ids.dedup();
        node_sets.insert(name.to_string(), ids);
    }
    Mesh {
        nodes,
        elements,
        edge_sets,
        node_sets,
    }
}

/// Straight beam `[0, length] × [0, height]` with `2·nx·ny` elements.
pub fn generate_beam_mesh(length: f64, height: f64, nx: usize, ny: usize) -> Result<Mesh> {
    check_positive("length", length)?;
    check_positive("height", height)?;
    check_counts(nx, ny)?;
    Ok(structured(nx, ny, |s, eta| [s * length, eta * height]))
}

/// Circular arch whose lower surface has radius `radius` and spans `chord`
/// between its end points; the thickness is measured along the radius.
pub fn generate_arch_mesh(
    chord: f64,
    thickness: f64,
    radius: f64,
    nx: usize,
    ny: usize,
) -> Result<Mesh> {
    generate_arch_mesh_with(chord, thickness, radius, nx, ny, ArchSpan::Chord)
}

/// As [`generate_arch_mesh`], with `span` read according to `kind`.
pub fn generate_arch_mesh_with(
    span: f64,
    thickness: f64,
    radius: f64,
    nx: usize,
    ny: usize,
    kind: ArchSpan,
) -> Result<Mesh> {
    check_positive("span", span)?;
    check_positive("thickness", thickness)?;
    check_positive("radius", radius)?;
    check_counts(nx, ny)?;
    let half_angle = match kind {
        ArchSpan::Chord => {
            if radius <= 0.5 * span {
                return Err(Error::invalid("arch radius must exceed half the chord"));
            }
            (0.5 * span / radius).asin()
        }
        ArchSpan::ArcLength => {
            let a = 0.5 * span / radius;
            if a >= FRAC_PI_2 {
                return Err(Error::invalid(
                    "arc length must be shorter than a half circle",
                ));
            }
            a
        }
    };
    let half_chord = radius * half_angle.sin();
    Ok(structured(nx, ny, |s, eta| {
        let theta = half_angle * (2.0 * s - 1.0);
        let r = radius + eta * thickness;
        // cos θ − cos θ₀ written as a product to stay accurate for huge radii
        let dcos = -2.0 * (0.5 * (theta + half_angle)).sin() * (0.5 * (theta - half_angle)).sin();
        [
            half_chord + r * theta.sin(),
            eta * thickness * theta.cos() + radius * dcos,
        ]
    }))
}

/// Ascending node indices matching `selector`.
pub fn select_nodes(mesh: &Mesh, selector: &NodeSelector<'_>) -> Result<Vec<usize>> {
    match selector {
        NodeSelector::Box { x, y } => Ok((0..mesh.nodes.len())
            .filter(|&i| {
                let p = mesh.nodes[i];
                p[0] >= x[0] && p[0] <= x[1] && p[1] >= y[0] && p[1] <= y[1]
            })
            .collect()),
        NodeSelector::Set(name) => mesh
            .node_sets
            .get(*name)
            .cloned()
            .ok_or_else(|| Error::NotFound(alloc::format!("node set '{name}'"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn beam_counts() {
        let m = generate_beam_mesh(2.0, 0.05, 80, 2).unwrap();
        assert_eq!(m.element_count(), 320);
        assert_eq!(m.node_count(), 805);
        assert_eq!(2 * m.node_count(), 1610);
        m.validate().unwrap();

        let small = generate_beam_mesh(1.0, 1.0, 1, 1).unwrap();
        assert_eq!(small.element_count(), 2);
        assert_eq!(small.node_count(), 9);
        small.validate().unwrap();
    }

    #[test]
    fn invalid_dimensions() {
        assert!(generate_beam_mesh(0.0, 1.0, 1, 1).is_err());
        assert!(generate_beam_mesh(1.0, -1.0, 1, 1).is_err());
        assert!(generate_beam_mesh(1.0, 1.0, 0, 1).is_err());
        assert!(generate_arch_mesh(2.0, 0.05, 1.0, 4, 1).is_err());
        assert!(generate_arch_mesh(2.0, 0.05, 0.99, 4, 1).is_err());
    }

    #[test]
    fn arch_rise_and_counts() {
        let m = generate_arch_mesh(2.0, 0.05, 8.0, 82, 2).unwrap();
        assert_eq!(m.element_count(), 328);
        m.validate().unwrap();
        // midspan node of the lower surface
        let bottom = &m.node_sets["bottom"];
        let mid = bottom
            .iter()
            .copied()
            .find(|&i| (m.nodes[i][0] - 1.0).abs() < 1e-12)
            .unwrap();
        let rise = 8.0 - 63f64.sqrt();
        assert!((m.nodes[mid][1] - rise).abs() < 1e-12);
        assert!((rise - 0.0627).abs() < 5e-5);
        // end points of the lower surface are one chord apart
        let first = m.nodes[bottom[0]];
        let last = m.nodes[*bottom.last().unwrap()];
        assert!(((last[0] - first[0]).hypot(last[1] - first[1]) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn arc_length_interpretation() {
        let m = generate_arch_mesh_with(2.0, 0.05, 8.0, 40, 1, ArchSpan::ArcLength).unwrap();
        let bottom = &m.node_sets["bottom"];
        // sum of corner-to-corner chords approximates the arc length from below
        let mut len = 0.0;
        for w in bottom.windows(2) {
            let (a, b) = (m.nodes[w[0]], m.nodes[w[1]]);
            len += (b[0] - a[0]).hypot(b[1] - a[1]);
        }
        assert!((len - 2.0).abs() < 1e-4 && len < 2.0);
    }

    #[test]
    fn huge_radius_recovers_the_straight_beam() {
        let arch = generate_arch_mesh(2.0, 0.05, 1e9, 2, 1).unwrap();
        let beam = generate_beam_mesh(2.0, 0.05, 2, 1).unwrap();
        for (a, b) in arch.nodes.iter().zip(&beam.nodes) {
            assert!((a[0] - b[0]).abs() < 1e-6 && (a[1] - b[1]).abs() < 1e-6);
        }
    }

    #[test]
    fn node_selection() {
        let (nx, ny) = (5, 2);
        let m = generate_beam_mesh(2.0, 0.05, nx, ny).unwrap();
        let left = select_nodes(&m, &NodeSelector::Set("left")).unwrap();
        assert_eq!(left.len(), 2 * ny + 1);
        assert!(left.iter().all(|&i| m.nodes[i][0] == 0.0));
        let bottom = select_nodes(&m, &NodeSelector::Set("bottom")).unwrap();
        assert!(bottom.iter().all(|&i| m.nodes[i][1] == 0.0));
        assert!(bottom.windows(2).all(|w| w[0] < w[1]));
        let top_mid = select_nodes(
            &m,
            &NodeSelector::Box {
                x: [0.99, 1.01],
                y: [0.049, 0.051],
            },
        )
        .unwrap();
        assert_eq!(top_mid.len(), 1);
        assert!(matches!(
            select_nodes(&m, &NodeSelector::Set("front")),
            Err(Error::NotFound(_))
        ));
        assert!(select_nodes(
            &m,
            &NodeSelector::Box {
                x: [5.0, 6.0],
                y: [0.0, 1.0]
            }
        )
        .unwrap()
        .is_empty());
    }

    #[test]
    fn generation_is_deterministic() {
        let a = generate_arch_mesh(2.0, 0.05, 8.0, 12, 2).unwrap();
        let b = generate_arch_mesh(2.0, 0.05, 8.0, 12, 2).unwrap();
        assert_eq!(a, b);
    }
}
