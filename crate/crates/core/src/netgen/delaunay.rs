//! Incremental 3D Delaunay triangulation (Bowyer–Watson) and its dual
//! Voronoi skeleton.

use std::collections::HashMap;

use crate::error::{Error, Result};

const NONE: usize = usize::MAX;

pub type Point = [f64; 3];

fn sub(a: &Point, b: &Point) -> Point {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn cross(a: &Point, b: &Point) -> Point {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

fn dot(a: &Point, b: &Point) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

/// Positive when `d` lies below the plane through `a, b, c` (counterclockwise
/// seen from above).
pub fn orient3d(a: &Point, b: &Point, c: &Point, d: &Point) -> f64 {
    let ad = sub(a, d);
    let bd = sub(b, d);
    let cd = sub(c, d);
    dot(&ad, &cross(&bd, &cd))
}

/// Positive when `e` lies inside the sphere through `a, b, c, d`, given
/// `orient3d(a, b, c, d) > 0`.
pub fn insphere(a: &Point, b: &Point, c: &Point, d: &Point, e: &Point) -> f64 {
    let rows = [sub(a, e), sub(b, e), sub(c, e), sub(d, e)];
    let lift = rows.map(|r| dot(&r, &r));
    let det3 = |i: usize, j: usize, k: usize| dot(&rows[i], &cross(&rows[j], &rows[k]));
    // cofactor expansion along the lifted column
    -lift[0] * det3(1, 2, 3) + lift[1] * det3(0, 2, 3) - lift[2] * det3(0, 1, 3) + lift[3] * det3(0, 1, 2)
}

/// Circumcenter of a nondegenerate tetrahedron.
pub fn circumcenter(a: &Point, b: &Point, c: &Point, d: &Point) -> Point {
    let u = sub(b, a);
    let v = sub(c, a);
    let w = sub(d, a);
    let vw = cross(&v, &w);
    let wu = cross(&w, &u);
    let uv = cross(&u, &v);
    let denom = 2.0 * dot(&u, &vw);
    let (uu, vv, ww) = (dot(&u, &u), dot(&v, &v), dot(&w, &w));
    let mut c = [0.0; 3];
    for k in 0..3 {
        c[k] = a[k] + (uu * vw[k] + vv * wu[k] + ww * uv[k]) / denom;
    }
    c
}

#[derive(Debug, Clone)]
struct Tet {
    v: [usize; 4],
    // neighbor across the face opposite v[i]
    nb: [usize; 4],
    alive: bool,
}

/// Delaunay tetrahedralization of a point set. The four trailing vertices
/// belong to an enclosing super-tetrahedron.
#[derive(Debug, Clone)]
pub struct Delaunay {
    points: Vec<Point>,
    real: usize,
    tets: Vec<Tet>,
}

/// Segment of the Voronoi skeleton: either between two circumcenters or a
/// ray leaving a hull face.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum VoronoiEdge {
    Segment(Point, Point),
    Ray(Point, Point),
}

fn check_not_coplanar(points: &[Point]) -> Result<()> {
    if points.len() < 4 {
        return Err(Error::DegenerateTessellation(format!("{} points cannot span a volume", points.len())));
    }
    let (lo, hi) = bounds(points);
    let scale = (0..3).map(|k| hi[k] - lo[k]).fold(0.0f64, f64::max);
    if scale == 0.0 {
        return Err(Error::DegenerateTessellation("all points coincide".into()));
    }
    let a = points[0];
    let Some(b) = points.iter().copied().max_by(|p, q| dot(&sub(p, &a), &sub(p, &a)).total_cmp(&dot(&sub(q, &a), &sub(q, &a)))) else {
        unreachable!()
    };
    let ab = sub(&b, &a);
    let Some(c) = points
        .iter()
        .copied()
        .max_by(|p, q| {
            let np = cross(&ab, &sub(p, &a));
            let nq = cross(&ab, &sub(q, &a));
            dot(&np, &np).total_cmp(&dot(&nq, &nq))
        })
    else {
        unreachable!()
    };
    let n = cross(&ab, &sub(&c, &a));
    let nn = dot(&n, &n).sqrt();
    if nn <= 1e-12 * scale * scale {
        return Err(Error::DegenerateTessellation("points are collinear".into()));
    }
    let height = points.iter().map(|p| (dot(&n, &sub(p, &a)) / nn).abs()).fold(0.0f64, f64::max);
    if height <= 1e-12 * scale {
        return Err(Error::DegenerateTessellation("points are coplanar".into()));
    }
    Ok(())
}

fn bounds(points: &[Point]) -> (Point, Point) {
    let mut lo = [f64::INFINITY; 3];
    let mut hi = [f64::NEG_INFINITY; 3];
    for p in points {
        for k in 0..3 {
            lo[k] = lo[k].min(p[k]);
            hi[k] = hi[k].max(p[k]);
        }
    }
    (lo, hi)
}

/// Insertion order along a serpentine grid sweep, which keeps the point
/// location walk short.
fn spatial_order(points: &[Point]) -> Vec<usize> {
    let (lo, hi) = bounds(points);
    let cells = ((points.len() as f64).cbrt().ceil() as usize).max(1);
    let cell = |p: &Point, k: usize| {
        let span = (hi[k] - lo[k]).max(f64::MIN_POSITIVE);
        (((p[k] - lo[k]) / span * cells as f64) as usize).min(cells - 1)
    };
    let key = |p: &Point| {
        let z = cell(p, 2);
        let mut y = cell(p, 1);
        if z % 2 == 1 {
            y = cells - 1 - y;
        }
        let mut x = p[0];
        if (z * cells + y) % 2 == 1 {
            x = -x;
        }
        (z, y, x)
    };
    let mut idx: Vec<usize> = (0..points.len()).collect();
    idx.sort_by(|&i, &j| {
        let (a, b) = (key(&points[i]), key(&points[j]));
        a.0.cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.total_cmp(&b.2))
    });
    idx
}

impl Delaunay {
    pub fn new(points: &[Point]) -> Result<Self> {
        if points.iter().flatten().any(|x| !x.is_finite()) {
            return Err(Error::DegenerateTessellation("non-finite coordinate".into()));
        }
        check_not_coplanar(points)?;
        let (lo, hi) = bounds(points);
        let center: Point = [0.5 * (lo[0] + hi[0]), 0.5 * (lo[1] + hi[1]), 0.5 * (lo[2] + hi[2])];
        let span = (0..3).map(|k| hi[k] - lo[k]).fold(0.0f64, f64::max);
        let k = 100.0 * span;
        let mut all = points.to_vec();
        for s in [[1.0, 1.0, 1.0], [1.0, -1.0, -1.0], [-1.0, 1.0, -1.0], [-1.0, -1.0, 1.0]] {
            all.push([center[0] + k * s[0], center[1] + k * s[1], center[2] + k * s[2]]);
        }
        let n = points.len();
        let mut sv = [n, n + 1, n + 2, n + 3];
        if orient3d(&all[sv[0]], &all[sv[1]], &all[sv[2]], &all[sv[3]]) < 0.0 {
            sv.swap(0, 1);
        }
        let mut dt = Self {
            points: all,
            real: n,
            tets: vec![Tet {
                v: sv,
                nb: [NONE; 4],
                alive: true,
            }],
        };
        for i in spatial_order(points) {
            dt.insert(i)?;
        }
        Ok(dt)
    }

    #[cfg(test)]
    fn orient_tet(&self, v: &[usize; 4]) -> f64 {
        let p = &self.points;
        orient3d(&p[v[0]], &p[v[1]], &p[v[2]], &p[v[3]])
    }

    fn contains_in_sphere(&self, t: usize, p: &Point) -> bool {
        let v = &self.tets[t].v;
        let q = &self.points;
        insphere(&q[v[0]], &q[v[1]], &q[v[2]], &q[v[3]], p) > 0.0
    }

    /// Orientation of tet `t` with vertex slot `i` replaced by `p`.
    fn orient_replaced(&self, t: usize, i: usize, p: &Point) -> f64 {
        let v = &self.tets[t].v;
        let mut pts = [self.points[v[0]], self.points[v[1]], self.points[v[2]], self.points[v[3]]];
        pts[i] = *p;
        orient3d(&pts[0], &pts[1], &pts[2], &pts[3])
    }

    fn locate(&self, p: &Point) -> usize {
        let mut t = self.tets.len() - 1;
        while !self.tets[t].alive {
            t -= 1;
        }
        let limit = 4 * self.tets.len() + 16;
        let mut rot = 0usize;
        'walk: for _ in 0..limit {
            rot = rot.wrapping_add(1);
            for k in 0..4 {
                let i = (k + rot) % 4;
                if self.orient_replaced(t, i, p) < 0.0 {
                    let next = self.tets[t].nb[i];
                    if next == NONE {
                        break 'walk;
                    }
                    t = next;
                    continue 'walk;
                }
            }
            return t;
        }
        // Walk failed (round-off); fall back to a scan.
        (0..self.tets.len())
            .rev()
            .find(|&t| self.tets[t].alive && self.contains_in_sphere(t, p))
            .unwrap_or(t)
    }

    fn insert(&mut self, pi: usize) -> Result<()> {
        let p = self.points[pi];
        let start = self.locate(&p);
        let mut in_cavity = HashMap::new();
        let mut cavity = vec![start];
        in_cavity.insert(start, ());
        let mut stack = vec![start];
        while let Some(t) = stack.pop() {
            for i in 0..4 {
                let u = self.tets[t].nb[i];
                if u != NONE && !in_cavity.contains_key(&u) && self.contains_in_sphere(u, &p) {
                    in_cavity.insert(u, ());
                    cavity.push(u);
                    stack.push(u);
                }
            }
        }
        // Grow the cavity until every boundary face sees `p` strictly, which
        // keeps cospherical configurations free of flat tetrahedra.
        loop {
            let mut grow = None;
            'scan: for &t in &cavity {
                for i in 0..4 {
                    let u = self.tets[t].nb[i];
                    if u != NONE && in_cavity.contains_key(&u) {
                        continue;
                    }
                    if self.orient_replaced(t, i, &p) <= 0.0 {
                        if u == NONE {
                            return Err(Error::DegenerateTessellation(format!(
                                "point {pi} escapes the enclosing tetrahedron"
                            )));
                        }
                        grow = Some(u);
                        break 'scan;
                    }
                }
            }
            match grow {
                Some(u) => {
                    in_cavity.insert(u, ());
                    cavity.push(u);
                }
                None => break,
            }
        }

        let mut edge_faces: HashMap<(usize, usize), (usize, usize)> = HashMap::new();
        for &t in &cavity {
            for i in 0..4 {
                let u = self.tets[t].nb[i];
                if u != NONE && in_cavity.contains_key(&u) {
                    continue;
                }
                let mut v = self.tets[t].v;
                v[i] = pi;
                let new = self.tets.len();
                let mut nb = [NONE; 4];
                nb[i] = u;
                if u != NONE {
                    let back = self.tets[u].nb.iter().position(|&x| x == t).expect("adjacency is symmetric");
                    self.tets[u].nb[back] = new;
                }
                self.tets.push(Tet { v, nb, alive: true });
                for j in 0..4 {
                    if j == i {
                        continue;
                    }
                    let mut pair = [NONE; 2];
                    let mut c = 0;
                    for k in 0..4 {
                        if k != i && k != j {
                            pair[c] = v[k];
                            c += 1;
                        }
                    }
                    let key = (pair[0].min(pair[1]), pair[0].max(pair[1]));
                    if let Some((other, oj)) = edge_faces.remove(&key) {
                        self.tets[new].nb[j] = other;
                        self.tets[other].nb[oj] = new;
                    } else {
                        edge_faces.insert(key, (new, j));
                    }
                }
            }
        }
        debug_assert!(edge_faces.is_empty());
        for &t in &cavity {
            self.tets[t].alive = false;
        }
        Ok(())
    }

    fn is_real(&self, t: usize) -> bool {
        self.tets[t].v.iter().all(|&v| v < self.real)
    }

    /// Tetrahedra spanned only by input points.
    pub fn real_tets(&self) -> Vec<[usize; 4]> {
        (0..self.tets.len())
            .filter(|&t| self.tets[t].alive && self.is_real(t))
            .map(|t| self.tets[t].v)
            .collect()
    }

    /// Voronoi edges dual to interior faces, plus rays leaving hull faces
    /// along the outward face normal.
    pub fn voronoi_edges(&self) -> Vec<VoronoiEdge> {
        let mut centers = HashMap::new();
        let mut center = |t: usize| -> Point {
            *centers.entry(t).or_insert_with(|| {
                let v = self.tets[t].v;
                let p = &self.points;
                circumcenter(&p[v[0]], &p[v[1]], &p[v[2]], &p[v[3]])
            })
        };
        let mut out = Vec::new();
        for t in 0..self.tets.len() {
            if !self.tets[t].alive || !self.is_real(t) {
                continue;
            }
            for i in 0..4 {
                let u = self.tets[t].nb[i];
                if u != NONE && self.is_real(u) {
                    if t < u {
                        out.push(VoronoiEdge::Segment(center(t), center(u)));
                    }
                    continue;
                }
                let v = self.tets[t].v;
                let f: Vec<Point> = (0..4).filter(|&k| k != i).map(|k| self.points[v[k]]).collect();
                let mut normal = cross(&sub(&f[1], &f[0]), &sub(&f[2], &f[0]));
                if dot(&normal, &sub(&self.points[v[i]], &f[0])) > 0.0 {
                    normal = normal.map(|x| -x);
                }
                let len = dot(&normal, &normal).sqrt();
                out.push(VoronoiEdge::Ray(center(t), normal.map(|x| x / len)));
            }
        }
        out
    }

    #[cfg(test)]
    fn check_delaunay(&self) -> bool {
        let alive: Vec<usize> = (0..self.tets.len()).filter(|&t| self.tets[t].alive).collect();
        alive.iter().all(|&t| {
            self.orient_tet(&self.tets[t].v) > 0.0
                && (0..self.real).all(|q| self.tets[t].v.contains(&q) || !self.contains_in_sphere(t, &self.points[q]))
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn predicates_on_unit_tet() {
        let a = [0.0, 0.0, 0.0];
        let b = [1.0, 0.0, 0.0];
        let c = [0.0, 1.0, 0.0];
        let d = [0.0, 0.0, 1.0];
        let (a, b) = if orient3d(&a, &b, &c, &d) > 0.0 { (a, b) } else { (b, a) };
        assert!(insphere(&a, &b, &c, &d, &[0.25, 0.25, 0.25]) > 0.0);
        assert!(insphere(&a, &b, &c, &d, &[2.0, 2.0, 2.0]) < 0.0);
        let cc = circumcenter(&a, &b, &c, &d);
        for q in [a, b, c, d] {
            let r = sub(&q, &cc);
            assert!((dot(&r, &r) - 0.75).abs() < 1e-12);
        }
    }

    #[test]
    fn random_points_satisfy_empty_sphere() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let pts: Vec<Point> = (0..60).map(|_| [rng.gen(), rng.gen(), rng.gen()]).collect();
        let dt = Delaunay::new(&pts).unwrap();
        assert!(dt.check_delaunay());
        let volume: f64 = dt
            .real_tets()
            .iter()
            .map(|v| dt.orient_tet(v) / 6.0)
            .sum();
        assert!(volume > 0.3 && volume <= 1.0);
    }

    #[test]
    fn cube_corners_triangulate_without_flat_tets() {
        let mut pts = Vec::new();
        for i in 0..8 {
            pts.push([(i & 1) as f64, ((i >> 1) & 1) as f64, ((i >> 2) & 1) as f64]);
        }
        let dt = Delaunay::new(&pts).unwrap();
        let tets = dt.real_tets();
        let volume: f64 = tets.iter().map(|v| dt.orient_tet(v) / 6.0).sum();
        assert!((volume - 1.0).abs() < 1e-12, "volume {volume}");
        assert!(tets.iter().all(|v| dt.orient_tet(v) > 0.0));
    }

    #[test]
    fn coplanar_points_are_rejected() {
        let pts: Vec<Point> = (0..10).map(|i| [i as f64 * 0.1, (i * i) as f64 * 0.01, 0.5]).collect();
        assert!(matches!(Delaunay::new(&pts), Err(Error::DegenerateTessellation(_))));
    }
}
