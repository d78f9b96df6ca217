//! Toric surfaces from complete two-dimensional fans.
//!
//! A complete fan is a cyclically ordered list of primitive integer rays
//! winding once counterclockwise. Singular cones (consecutive determinant
//! above one) are resolved by Hirzebruch-Jung continued fractions: the
//! inserted rays are the lattice points on the sail of the cone, their
//! curves have self-intersection at most -2, and they enter the model as
//! contracted curves. Torus-invariant curves of the original rays form a
//! curve universe that generates the full cone of curves, so cone and
//! contraction verdicts on toric inputs are unconditional.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::exactlin::{self, QMatrix, Rational};
use crate::surface::{
    CurveConfig, CurveId, CurveRecord, Divisor, PointRecord, SingularModel, SurfaceError,
};

/// Primitive integer vector in the plane.
pub type RayVec = (i64, i64);

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ToricError {
    #[error("ray ({}, {}) is not primitive", .0 .0, .0 .1)]
    NotPrimitive(RayVec),
    #[error("fan is not complete: {0}")]
    NotComplete(String),
    #[error("divisor is not supported on torus-invariant curves: {0}")]
    NotToric(CurveId),
    #[error(transparent)]
    Surface(#[from] SurfaceError),
}

/// A complete fan in the plane, given by its rays in counterclockwise
/// cyclic order.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Fan2D {
    pub rays: Vec<RayVec>,
}

fn det(u: RayVec, v: RayVec) -> i64 {
    u.0 * v.1 - u.1 * v.0
}

fn gcd(a: i64, b: i64) -> i64 {
    let (mut a, mut b) = (a.abs(), b.abs());
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Extended gcd: returns (g, s, t) with `a s + b t = g`.
fn ext_gcd(a: i64, b: i64) -> (i64, i64, i64) {
    if b == 0 {
        let sign = if a < 0 { -1 } else { 1 };
        return (a.abs(), sign, 0);
    }
    let (g, s, t) = ext_gcd(b, a.rem_euclid(b));
    (g, t, s - (a.div_euclid(b)) * t)
}

/// Strict weak order on ray directions by angle in [0, 2pi).
fn angle_cmp(u: RayVec, v: RayVec) -> std::cmp::Ordering {
    let half = |w: RayVec| u8::from(!(w.1 > 0 || (w.1 == 0 && w.0 > 0)));
    half(u).cmp(&half(v)).then_with(|| 0.cmp(&det(u, v)))
}

impl Fan2D {
    pub fn new(rays: Vec<RayVec>) -> Self {
        Fan2D { rays }
    }

    /// Checks primitivity, distinct directions, positive consecutive
    /// determinants, and a single counterclockwise turn.
    pub fn validate(&self) -> Result<(), ToricError> {
        for &ray in &self.rays {
            if ray == (0, 0) || gcd(ray.0, ray.1) != 1 {
                return Err(ToricError::NotPrimitive(ray));
            }
        }
        let n = self.rays.len();
        if n < 3 {
            return Err(ToricError::NotComplete(format!(
                "{n} rays cannot span the plane"
            )));
        }
        for i in 0..n {
            for j in (i + 1)..n {
                if self.rays[i] == self.rays[j] {
                    return Err(ToricError::NotComplete(format!(
                        "ray ({}, {}) repeats",
                        self.rays[i].0, self.rays[i].1
                    )));
                }
            }
        }
        let mut wraps = 0;
        for i in 0..n {
            let a = self.rays[i];
            let b = self.rays[(i + 1) % n];
            let d = det(a, b);
            if d <= 0 {
                return Err(ToricError::NotComplete(format!(
                    "consecutive rays ({}, {}) and ({}, {}) have determinant {d}",
                    a.0, a.1, b.0, b.1
                )));
            }
            if angle_cmp(b, a) == std::cmp::Ordering::Less {
                wraps += 1;
            }
        }
        if wraps != 1 {
            return Err(ToricError::NotComplete(format!(
                "rays wind {wraps} times around the origin"
            )));
        }
        Ok(())
    }
}

/// Rays inserted by the Hirzebruch-Jung resolution of the cone spanned by
/// `u` and `w`, in counterclockwise order strictly between them. Each
/// inserted ray is the next sail vertex: the primitive `z` with
/// `det(cur, z) = 1` closest to the far edge from the correct side.
pub fn hirzebruch_jung(u: RayVec, w: RayVec) -> Vec<RayVec> {
    let mut out = Vec::new();
    let mut cur = u;
    loop {
        let d = det(cur, w);
        assert!(d >= 1, "cone is degenerate");
        if d == 1 {
            return out;
        }
        let (g, s, t) = ext_gcd(cur.0, cur.1);
        debug_assert_eq!(g, 1);
        // det(cur, (x, y)) = cur.0 * y - cur.1 * x = 1 at (x, y) = (-t, s).
        let mut z = (-t, s);
        let dz = det(z, w);
        let k = (-dz).div_euclid(d) + i64::from((-dz).rem_euclid(d) != 0);
        z = (z.0 + k * cur.0, z.1 + k * cur.1);
        debug_assert_eq!(det(cur, z), 1);
        debug_assert!(det(z, w) >= 1 && det(z, w) < d);
        out.push(z);
        cur = z;
    }
}

/// One ray of the resolved fan together with its curve.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ToricRay {
    pub vector: RayVec,
    pub curve: CurveId,
    /// Inserted by the resolution, hence contracted in the model.
    pub inserted: bool,
}

/// A toric surface built from a fan: the resolved model, the certified
/// curve universe, and the canonical and boundary divisors on the smooth
/// model.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ToricSurface {
    pub model: SingularModel,
    /// Curves of the original rays; they generate the cone of curves of X.
    pub universe: Vec<CurveId>,
    /// `K_Y = -sum of all invariant curves` on the resolved model.
    pub canonical: Divisor,
    /// Reduced toric boundary of X: the original-ray curves.
    pub boundary: Divisor,
    /// Rays of the resolved (smooth) fan in counterclockwise order.
    pub rays: Vec<ToricRay>,
}

/// Builds the combinatorial model of the toric surface of a complete fan.
/// Singular cones are subdivided by `hirzebruch_jung`; self-intersections
/// come from the relation `v_{i-1} + v_{i+1} = -(D_i^2) v_i` on the smooth
/// fan, adjacent curves meet once, and the boundary is simple normal
/// crossing with one point per 2-cone.
pub fn config_from_fan(fan: &Fan2D) -> Result<ToricSurface, ToricError> {
    fan.validate()?;
    let n = fan.rays.len();

    let mut rays: Vec<ToricRay> = Vec::new();
    let mut inserted_count = 0;
    for i in 0..n {
        rays.push(ToricRay {
            vector: fan.rays[i],
            curve: CurveId::from(format!("D{}", i + 1).as_str()),
            inserted: false,
        });
        for z in hirzebruch_jung(fan.rays[i], fan.rays[(i + 1) % n]) {
            inserted_count += 1;
            rays.push(ToricRay {
                vector: z,
                curve: CurveId::from(format!("E{inserted_count}").as_str()),
                inserted: true,
            });
        }
    }

    let m = rays.len();
    let mut curves = Vec::new();
    for i in 0..m {
        let prev = rays[(i + m - 1) % m].vector;
        let next = rays[(i + 1) % m].vector;
        let self_int = -det(prev, next);
        curves.push(CurveRecord::with_adjunction(
            rays[i].curve.clone(),
            self_int,
            0,
        ));
    }
    let mut config = CurveConfig::new(curves);
    let mut points = Vec::new();
    for i in 0..m {
        let a = rays[i].curve.clone();
        let b = rays[(i + 1) % m].curve.clone();
        config.set_intersection(a.as_str(), b.as_str(), 1);
        points.push(PointRecord {
            id: format!("sigma{}", i + 1),
            curves: vec![a, b],
        });
    }
    config.snc_attested = true;
    config.points = Some(points);

    let contracted: BTreeSet<CurveId> = rays
        .iter()
        .filter(|r| r.inserted)
        .map(|r| r.curve.clone())
        .collect();
    let model = SingularModel::new(config, contracted);

    let mut canonical = Divisor::zero();
    for r in &rays {
        canonical.set(r.curve.clone(), Rational::from(-1));
    }
    let mut boundary = Divisor::zero();
    let mut universe = Vec::new();
    for r in rays.iter().filter(|r| !r.inserted) {
        boundary.set(r.curve.clone(), Rational::one());
        universe.push(r.curve.clone());
    }

    Ok(ToricSurface {
        model,
        universe,
        canonical,
        boundary,
        rays,
    })
}

/// A lattice-polytope certificate that a nef divisor is semi-ample, with
/// the dimension of the image of the associated map.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SemiampleWitness {
    pub polytope_vertices: Vec<(Rational, Rational)>,
    pub image_dim: u8,
}

/// Outcome of the toric nef test: a semi-ample witness, or the curve that
/// meets the divisor negatively.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SemiampleCheck {
    Witness(SemiampleWitness),
    NotNef { curve: CurveId, degree: Rational },
}

/// Checks nefness of a divisor supported on invariant curves of the
/// (possibly further contracted) toric model and, when nef, produces the
/// polytope witness. `model` may extend `surface.model` by extra contracted
/// rays, as happens along an MMP run; the surviving rays are those whose
/// curve is not contracted.
pub fn nef_semiample_witness(
    surface: &ToricSurface,
    model: &SingularModel,
    d: &Divisor,
) -> Result<SemiampleCheck, ToricError> {
    let toric_ids: BTreeSet<&CurveId> = surface.rays.iter().map(|r| &r.curve).collect();
    if let Some(id) = d.support().find(|id| !toric_ids.contains(id)) {
        return Err(ToricError::NotToric(id.clone()));
    }
    let surviving: Vec<&ToricRay> = surface
        .rays
        .iter()
        .filter(|r| !model.is_contracted(&r.curve))
        .collect();
    if surviving.len() < 3 {
        return Err(ToricError::NotComplete(format!(
            "{} surviving rays",
            surviving.len()
        )));
    }

    // Nef test against every invariant curve; the universe is complete for
    // toric surfaces, so this decides nefness outright.
    for ray in &surviving {
        let degree = model
            .intersect_on_x(d, &Divisor::unit(ray.curve.clone()))
            .map_err(ToricError::Surface)?;
        if degree.is_negative() {
            return Ok(SemiampleCheck::NotNef {
                curve: ray.curve.clone(),
                degree,
            });
        }
    }

    // One polytope vertex per 2-cone of the contracted fan: the solution of
    // <mv, v_i> = -d_i on the two spanning rays.
    let mut vertices: Vec<(Rational, Rational)> = Vec::new();
    let k = surviving.len();
    for i in 0..k {
        let a = surviving[i];
        let b = surviving[(i + 1) % k];
        let mat = QMatrix::from_int_rows(&[&[a.vector.0, a.vector.1], &[b.vector.0, b.vector.1]]);
        let rhs = vec![-d.coeff(&a.curve), -d.coeff(&b.curve)];
        let mv = exactlin::solve_linear(&mat, &rhs)
            .map_err(|e| ToricError::Surface(SurfaceError::from(e)))?;
        let vertex = (mv[0].clone(), mv[1].clone());
        if !vertices.contains(&vertex) {
            vertices.push(vertex);
        }
    }

    let image_dim = affine_dim(&vertices);
    Ok(SemiampleCheck::Witness(SemiampleWitness {
        polytope_vertices: vertices,
        image_dim,
    }))
}

fn affine_dim(points: &[(Rational, Rational)]) -> u8 {
    if points.len() <= 1 {
        return 0;
    }
    let base = &points[0];
    let diffs: Vec<(Rational, Rational)> = points[1..]
        .iter()
        .map(|p| (&p.0 - &base.0, &p.1 - &base.1))
        .collect();
    if diffs.iter().all(|(x, y)| x.is_zero() && y.is_zero()) {
        return 0;
    }
    let pivot = diffs
        .iter()
        .find(|(x, y)| !x.is_zero() || !y.is_zero())
        .unwrap();
    let collinear = diffs
        .iter()
        .all(|(x, y)| (&pivot.0 * y - &pivot.1 * x).is_zero());
    if collinear {
        1
    } else {
        2
    }
}

/// Exhaustively enumerates complete fans, up to the symmetries of the
/// square lattice, whose rays are primitive vectors with coordinates
/// bounded by `coord_bound` and whose ray count is between 3 and
/// `max_rays`. The returned list is deterministic.
pub fn enumerate_complete_fans(max_rays: usize, coord_bound: i64) -> Vec<Fan2D> {
    let mut pool: Vec<RayVec> = Vec::new();
    for x in -coord_bound..=coord_bound {
        for y in -coord_bound..=coord_bound {
            if (x, y) != (0, 0) && gcd(x, y) == 1 {
                pool.push((x, y));
            }
        }
    }
    pool.sort_by(|&a, &b| angle_cmp(a, b));

    // Lattice symmetries of the square: the dihedral group of order 8.
    let symmetries: [fn(RayVec) -> RayVec; 8] = [
        |(x, y)| (x, y),
        |(x, y)| (-y, x),
        |(x, y)| (-x, -y),
        |(x, y)| (y, -x),
        |(x, y)| (y, x),
        |(x, y)| (-x, y),
        |(x, y)| (-y, -x),
        |(x, y)| (x, -y),
    ];

    let canonical = |rays: &[RayVec]| -> Vec<RayVec> {
        // Lexicographically smallest rotation over all symmetric images,
        // each re-sorted into counterclockwise order first.
        let mut best: Option<Vec<RayVec>> = None;
        for sym in symmetries {
            let mut image: Vec<RayVec> = rays.iter().map(|&r| sym(r)).collect();
            image.sort_by(|&a, &b| angle_cmp(a, b));
            for start in 0..image.len() {
                let mut rot = image.clone();
                rot.rotate_left(start);
                if best.as_ref().is_none_or(|b| &rot < b) {
                    best = Some(rot);
                }
            }
        }
        best.unwrap()
    };

    let mut seen: BTreeSet<Vec<RayVec>> = BTreeSet::new();
    let mut fans = Vec::new();
    let n = pool.len();
    let max = max_rays.min(n);
    // Subsets of the angle-sorted pool are already in cyclic order; the fan
    // is complete exactly when all consecutive determinants are positive.
    let mut stack: Vec<(Vec<usize>, usize)> = vec![(Vec::new(), 0)];
    while let Some((subset, next)) = stack.pop() {
        if subset.len() >= 3 {
            let rays: Vec<RayVec> = subset.iter().map(|&i| pool[i]).collect();
            let fan = Fan2D::new(rays.clone());
            if fan.validate().is_ok() && seen.insert(canonical(&rays)) {
                fans.push(fan);
            }
        }
        if subset.len() < max {
            for i in next..n {
                let mut bigger = subset.clone();
                bigger.push(i);
                stack.push((bigger, i + 1));
            }
        }
    }
    fans.sort_by(|a, b| a.rays.cmp(&b.rays));
    fans
}
