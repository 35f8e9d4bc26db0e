//! Linear operators on sparse states: vertex and plaquette terms, the
//! stabilizer Hamiltonian, particle projectors and syndrome scans.

use std::collections::BTreeSet;
use std::sync::Arc;

use num_traits::{One, Zero};
use rand::Rng;
use serde::Serialize;

use crate::error::{QdError, Result};
use crate::group::{ambient, irrep_table, s3, Element, FiniteGroup};
use crate::lattice::{EdgeId, Lattice, PlaqId, Region, Site, VertexId};
use crate::ribbon::RibbonOp;
use crate::state::{kernel, Config, SparseState};
use crate::{Complex, Real};

type Emit<'a, T> = dyn FnMut(Config, Complex<T>) + 'a;
pub type CustomFn<T> = dyn Fn(&Lattice, &Config, Complex<T>, &mut Emit<'_, T>) + Send + Sync;

/// Operator acting on edge (and ancilla) configurations.
#[derive(Clone)]
pub enum LinearOp<T: Real> {
    Identity,
    /// `x ↦ g·x` on one slot.
    Left {
        slot: usize,
        g: Element,
    },
    /// `x ↦ x·g` on one slot.
    Right {
        slot: usize,
        g: Element,
    },
    /// Diagonal phase indexed by the slot value.
    Diagonal {
        slot: usize,
        phases: Arc<[Complex<T>; 16]>,
    },
    /// Dense matrix on one slot, in the basis of that slot's allowed values.
    Dense {
        slot: usize,
        basis: Arc<Vec<Element>>,
        matrix: Arc<Vec<Complex<T>>>,
    },
    /// Projector onto slot values in the set.
    SlotIn {
        slot: usize,
        set: Arc<Vec<Element>>,
    },
    /// Gauge transformation `A_v^g`.
    Vertex {
        v: VertexId,
        g: Element,
    },
    /// Flux projector `B^h` at a site.
    Flux {
        site: Site,
        h: Element,
    },
    /// Projector onto plaquette flux in a conjugation-invariant set.
    FluxIn {
        p: PlaqId,
        set: Arc<Vec<Element>>,
    },
    Ribbon(Arc<RibbonOp<T>>),
    /// Applies the branch whose key equals the control slot's value.
    Controlled {
        control: usize,
        branches: Arc<Vec<(Element, LinearOp<T>)>>,
    },
    Custom(Arc<CustomFn<T>>),
    /// Applied left to right: the first operator acts first.
    Sequence(Vec<LinearOp<T>>),
    Sum(Vec<(Complex<T>, LinearOp<T>)>),
    /// Overrides the set of vertices where the operator fails to be gauge covariant.
    Anchored {
        anchors: Vec<VertexId>,
        op: Box<LinearOp<T>>,
    },
}

impl<T: Real> std::fmt::Debug for LinearOp<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            LinearOp::Identity => write!(f, "I"),
            LinearOp::Left { slot, g } => write!(f, "L[{slot}]^{}", g.0),
            LinearOp::Right { slot, g } => write!(f, "R[{slot}]^{}", g.0),
            LinearOp::Diagonal { slot, .. } => write!(f, "D[{slot}]"),
            LinearOp::Dense { slot, .. } => write!(f, "M[{slot}]"),
            LinearOp::SlotIn { slot, .. } => write!(f, "P[{slot}]"),
            LinearOp::Vertex { v, g } => write!(f, "A_{v}^{}", g.0),
            LinearOp::Flux { site, h } => write!(f, "B_{:?}^{}", site, h.0),
            LinearOp::FluxIn { p, .. } => write!(f, "B_{p}^set"),
            LinearOp::Ribbon(r) => write!(f, "F[{}]", r.ribbon.len()),
            LinearOp::Controlled { control, .. } => write!(f, "C[{control}]"),
            LinearOp::Custom(_) => write!(f, "custom"),
            LinearOp::Sequence(v) => f.debug_list().entries(v).finish(),
            LinearOp::Sum(v) => write!(f, "sum({})", v.len()),
            LinearOp::Anchored { op, .. } => write!(f, "{op:?}"),
        }
    }
}

impl<T: Real> LinearOp<T> {
    pub fn seq(ops: Vec<LinearOp<T>>) -> Self {
        LinearOp::Sequence(ops)
    }

    /// `self` followed by `next`, i.e. the product `next · self`.
    pub fn then(self, next: LinearOp<T>) -> Self {
        match self {
            LinearOp::Sequence(mut v) => {
                v.push(next);
                LinearOp::Sequence(v)
            }
            other => LinearOp::Sequence(vec![other, next]),
        }
    }

    pub fn scaled(self, c: Complex<T>) -> Self {
        LinearOp::Sum(vec![(c, self)])
    }

    pub fn anchored(self, anchors: Vec<VertexId>) -> Self {
        LinearOp::Anchored {
            anchors,
            op: Box::new(self),
        }
    }

    /// Diagonal operator from a function of the slot value.
    pub fn diagonal(slot: usize, f: impl Fn(Element) -> Complex<T>) -> Self {
        let mut phases = [Complex::zero(); 16];
        for (k, p) in phases.iter_mut().enumerate() {
            *p = f(Element(k as u8));
        }
        LinearOp::Diagonal {
            slot,
            phases: Arc::new(phases),
        }
    }

    /// Vertices at which this operator does not commute with the gauge.
    pub fn anchors(&self, lat: &Lattice) -> BTreeSet<VertexId> {
        let mut out = BTreeSet::new();
        self.collect_anchors(lat, &mut out);
        out
    }

    fn collect_anchors(&self, lat: &Lattice, out: &mut BTreeSet<VertexId>) {
        let edge_ends = |slot: usize, out: &mut BTreeSet<VertexId>| {
            if slot < lat.num_edges() {
                out.insert(lat.edge(slot).tail);
                out.insert(lat.edge(slot).head);
            }
        };
        match self {
            LinearOp::Identity | LinearOp::FluxIn { .. } | LinearOp::Vertex { .. } => {}
            LinearOp::Left { slot, .. }
            | LinearOp::Right { slot, .. }
            | LinearOp::Diagonal { slot, .. }
            | LinearOp::Dense { slot, .. }
            | LinearOp::SlotIn { slot, .. } => edge_ends(*slot, out),
            LinearOp::Flux { site, .. } => {
                out.insert(site.v);
            }
            LinearOp::Ribbon(r) => out.extend(r.anchors()),
            LinearOp::Controlled { branches, .. } => {
                for (_, b) in branches.iter() {
                    b.collect_anchors(lat, out);
                }
            }
            LinearOp::Custom(_) => out.extend(0..lat.num_vertices()),
            LinearOp::Sequence(v) => v.iter().for_each(|o| o.collect_anchors(lat, out)),
            LinearOp::Sum(v) => v.iter().for_each(|(_, o)| o.collect_anchors(lat, out)),
            LinearOp::Anchored { anchors, .. } => out.extend(anchors.iter().copied()),
        }
    }

    /// Applies the operator to one basis configuration.
    pub fn apply_config(
        &self,
        lat: &Lattice,
        cfg: &Config,
        amp: Complex<T>,
        emit: &mut Emit<'_, T>,
    ) {
        match self {
            LinearOp::Identity => emit(*cfg, amp),
            LinearOp::Left { slot, g } => {
                let mut c = *cfg;
                if *slot < lat.num_edges() {
                    kernel::left(lat, &mut c, *slot, *g);
                } else {
                    c.set(*slot, ambient::mul(*g, c.get(*slot)));
                }
                emit(c, amp);
            }
            LinearOp::Right { slot, g } => {
                let mut c = *cfg;
                if *slot < lat.num_edges() {
                    kernel::right(lat, &mut c, *slot, *g);
                } else {
                    c.set(*slot, ambient::mul(c.get(*slot), *g));
                }
                emit(c, amp);
            }
            LinearOp::Diagonal { slot, phases } => {
                let p = phases[cfg.get(*slot).index()];
                if !p.is_zero() {
                    emit(*cfg, amp * p);
                }
            }
            LinearOp::Dense {
                slot,
                basis,
                matrix,
            } => {
                let d = basis.len();
                let x = cfg.get(*slot);
                if let Some(col) = basis.iter().position(|&b| b == x) {
                    for row in 0..d {
                        let m = matrix[row * d + col];
                        if !m.is_zero() {
                            let mut c = *cfg;
                            c.set(*slot, basis[row]);
                            emit(c, amp * m);
                        }
                    }
                }
            }
            LinearOp::SlotIn { slot, set } => {
                if set.contains(&cfg.get(*slot)) {
                    emit(*cfg, amp);
                }
            }
            LinearOp::Vertex { v, g } => {
                let mut c = *cfg;
                kernel::vertex(lat, &mut c, *v, *g);
                emit(c, amp);
            }
            LinearOp::Flux { site, h } => {
                if kernel::flux(lat, cfg, *site) == *h {
                    emit(*cfg, amp);
                }
            }
            LinearOp::FluxIn { p, set } => {
                let site = lat.canonical_site(*p);
                if set.contains(&kernel::flux(lat, cfg, site)) {
                    emit(*cfg, amp);
                }
            }
            LinearOp::Ribbon(r) => r.apply_config(lat, cfg, amp, emit),
            LinearOp::Controlled { control, branches } => {
                let k = cfg.get(*control);
                if let Some((_, op)) = branches.iter().find(|(key, _)| *key == k) {
                    op.apply_config(lat, cfg, amp, emit);
                }
            }
            LinearOp::Custom(f) => f(lat, cfg, amp, emit),
            LinearOp::Sequence(ops) => {
                let mut cur = vec![(*cfg, amp)];
                for op in ops {
                    let mut next = Vec::with_capacity(cur.len());
                    for (c, a) in &cur {
                        op.apply_config(lat, c, *a, &mut |c2, a2| next.push((c2, a2)));
                    }
                    cur = next;
                }
                for (c, a) in cur {
                    emit(c, a);
                }
            }
            LinearOp::Sum(terms) => {
                for (w, op) in terms {
                    op.apply_config(lat, cfg, amp * *w, emit);
                }
            }
            LinearOp::Anchored { op, .. } => op.apply_config(lat, cfg, amp, emit),
        }
    }

    /// Applies the operator to a state in place, respecting its gauge frame.
    pub fn apply(&self, state: &mut SparseState<T>) -> Result<()> {
        if let Some(frame) = state.frame() {
            for v in self.anchors(state.lattice()) {
                if !frame.is_root(v) {
                    return Err(QdError::GaugeViolation(v));
                }
            }
        }
        self.apply_unchecked(state);
        Ok(())
    }

    fn apply_unchecked(&self, state: &mut SparseState<T>) {
        match self {
            LinearOp::Sequence(ops) => ops.iter().for_each(|o| o.apply_unchecked(state)),
            LinearOp::Sum(terms) if terms.len() > 1 => {
                let base = state.clone();
                let mut acc = state.zero_like();
                for (w, op) in terms {
                    let mut s = base.clone();
                    op.apply_unchecked(&mut s);
                    acc.add_scaled(*w, &s).expect("same space");
                }
                *state = acc;
            }
            LinearOp::Anchored { op, .. } => op.apply_unchecked(state),
            _ => {
                let lat = state.lattice().clone();
                state.map_configs(|cfg, a, emit| self.apply_config(&lat, cfg, a, emit));
            }
        }
    }

    /// Returns `O|ψ⟩` without modifying the input.
    pub fn applied(&self, state: &SparseState<T>) -> Result<SparseState<T>> {
        let mut s = state.clone();
        self.apply(&mut s)?;
        Ok(s)
    }
}

fn cplx<T: Real>(re: f64, im: f64) -> Complex<T> {
    Complex::new(T::c(re), T::c(im))
}

fn real<T: Real>(x: f64) -> Complex<T> {
    cplx(x, 0.0)
}

/// `A_v^g` with `g` in the vertex's gauge group.
pub fn vertex_op<T: Real>(lat: &Lattice, v: VertexId, g: Element) -> Result<LinearOp<T>> {
    if !lat.gauge_group(v).contains(&g) {
        return Err(QdError::DimensionMismatch {
            slot: v,
            detail: format!("element {} is not in the gauge group of vertex {v}", g.0),
        });
    }
    Ok(LinearOp::Vertex { v, g })
}

/// `B^h` at a site, with `h` in the plaquette's factor.
pub fn flux_op<T: Real>(lat: &Lattice, site: Site, h: Element) -> Result<LinearOp<T>> {
    lat.boundary(site)?;
    if lat.project(lat.plaquette_region(site.p), h) != h {
        return Err(QdError::DimensionMismatch {
            slot: site.p,
            detail: format!("flux {} does not live on plaquette {}", h.0, site.p),
        });
    }
    Ok(LinearOp::Flux { site, h })
}

/// Vertex projector `A_v = (1/|K_v|) Σ_g A_v^g`.
pub fn vertex_projector<T: Real>(lat: &Lattice, v: VertexId) -> LinearOp<T> {
    let k = lat.gauge_group(v);
    let w = real(1.0 / k.len() as f64);
    LinearOp::Sum(k.iter().map(|&g| (w, LinearOp::Vertex { v, g })).collect())
}

/// Vertex charge projector for an irrep of the vertex gauge group,
/// `(d/|K|) Σ_k χ(k)* A_v^k`.
pub fn vertex_charge<T: Real>(lat: &Lattice, v: VertexId, irrep: usize) -> Result<LinearOp<T>> {
    let k = lat.gauge_group(v).to_vec();
    let sub = FiniteGroup::subgroup_as_group(
        &ambient::group(),
        &crate::group::Subgroup::from_members(k.clone()),
    )?;
    let irreps = irrep_table(&sub)?;
    let r = irreps.get(irrep).ok_or_else(|| QdError::LabelRegion {
        label: format!("irrep {irrep}"),
        region: format!("vertex {v}"),
    })?;
    let norm = r.dim as f64 / k.len() as f64;
    let terms = k
        .iter()
        .enumerate()
        .map(|(i, &g)| {
            let ch = r.character(Element(i as u8)).conj();
            (cplx(ch.re * norm, ch.im * norm), LinearOp::Vertex { v, g })
        })
        .collect();
    Ok(LinearOp::Sum(terms))
}

/// Number of irreps of the vertex gauge group and their labels.
pub fn vertex_irrep_labels(lat: &Lattice, v: VertexId) -> Result<Vec<String>> {
    let k = lat.gauge_group(v).to_vec();
    let sub = FiniteGroup::subgroup_as_group(
        &ambient::group(),
        &crate::group::Subgroup::from_members(k),
    )?;
    Ok(irrep_table(&sub)?.into_iter().map(|r| r.label).collect())
}

/// Plaquette projector onto trivial flux.
pub fn plaquette_projector<T: Real>(lat: &Lattice, p: PlaqId) -> LinearOp<T> {
    LinearOp::Flux {
        site: lat.canonical_site(p),
        h: Element::IDENTITY,
    }
}

/// Projector forcing a paired wall edge into `K`.
pub fn wall_edge_projector<T: Real>(lat: &Lattice, e: EdgeId) -> Result<LinearOp<T>> {
    let w = lat
        .wall
        .as_ref()
        .ok_or_else(|| QdError::Wall("lattice has no wall".into()))?;
    Ok(LinearOp::SlotIn {
        slot: e,
        set: Arc::new(w.subgroup.members.clone()),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum StabilizerKind {
    Vertex(VertexId),
    Plaquette(PlaqId),
    WallEdge(EdgeId),
}

/// Commuting projectors whose common +1 space is the ground space. Vertices
/// in `disabled` (holes) contribute no term.
pub fn stabilizers<T: Real>(
    lat: &Lattice,
    disabled: &BTreeSet<VertexId>,
) -> Vec<(StabilizerKind, LinearOp<T>)> {
    let mut out = Vec::new();
    for v in 0..lat.num_vertices() {
        if !disabled.contains(&v) {
            out.push((StabilizerKind::Vertex(v), vertex_projector(lat, v)));
        }
    }
    for p in 0..lat.num_plaquettes() {
        out.push((StabilizerKind::Plaquette(p), plaquette_projector(lat, p)));
    }
    if let Some(w) = &lat.wall {
        if w.rep == crate::lattice::WallRep::Paired {
            for e in 0..lat.num_edges() {
                if lat.edge_region(e) == Region::Wall {
                    out.push((
                        StabilizerKind::WallEdge(e),
                        wall_edge_projector(lat, e).unwrap(),
                    ));
                }
            }
        }
    }
    out
}

/// Ground state obtained by projecting the all-identity configuration with
/// every vertex term. With `roots`, the state is stored in a gauge frame.
pub fn ground_state<T: Real>(
    lat: Arc<Lattice>,
    roots: Option<&BTreeSet<VertexId>>,
) -> Result<SparseState<T>> {
    let mut s = match roots {
        None => SparseState::identity_config(lat.clone()),
        Some(r) => SparseState::gauge_identity(lat.clone(), r)?,
    };
    let targets: Vec<VertexId> = match roots {
        None => (0..lat.num_vertices()).collect(),
        Some(r) => r.iter().copied().collect(),
    };
    for v in targets {
        vertex_projector::<T>(&lat, v).apply(&mut s)?;
    }
    s.normalize()?;
    Ok(s)
}

/// `⟨ψ|O|ψ⟩ / ⟨ψ|ψ⟩`.
pub fn expectation<T: Real>(state: &SparseState<T>, op: &LinearOp<T>) -> Result<Complex<T>> {
    let out = op.applied(state)?;
    Ok(state.inner(&out)? / Complex::from(state.norm_sqr()))
}

/// Probability of a projector's outcome: `‖P ψ‖² / ‖ψ‖²`.
pub fn probability<T: Real>(state: &SparseState<T>, proj: &LinearOp<T>) -> Result<T> {
    let out = proj.applied(state)?;
    Ok(out.norm_sqr() / state.norm_sqr())
}

/// Projects onto one outcome and renormalizes; returns its probability.
pub fn project<T: Real>(state: &mut SparseState<T>, proj: &LinearOp<T>) -> Result<T> {
    let before = state.norm_sqr();
    proj.apply(state)?;
    let p = state.norm_sqr() / before;
    state.normalize()?;
    Ok(p)
}

/// Outcome probabilities of a projector family, checked to sum to one.
pub fn family_probabilities<T: Real>(
    state: &SparseState<T>,
    family: &[(String, LinearOp<T>)],
    tol: f64,
) -> Result<Vec<(String, T)>> {
    let mut out = Vec::with_capacity(family.len());
    let mut total = 0.0;
    for (label, op) in family {
        let p = probability(state, op)?;
        total += p.to_f64().unwrap();
        out.push((label.clone(), p));
    }
    if (total - 1.0).abs() > tol {
        return Err(QdError::Consistency(total));
    }
    Ok(out)
}

/// Samples one outcome of a projector family and collapses the state.
pub fn measure<T: Real, R: Rng>(
    state: &mut SparseState<T>,
    family: &[(String, LinearOp<T>)],
    rng: &mut R,
) -> Result<(String, T)> {
    let probs = family_probabilities(state, family, 1e-6)?;
    let r: f64 = rng.gen();
    let mut acc = 0.0;
    let mut pick = probs.len() - 1;
    for (k, (_, p)) in probs.iter().enumerate() {
        acc += p.to_f64().unwrap();
        if r < acc {
            pick = k;
            break;
        }
    }
    let p = project(state, &family[pick].1)?;
    Ok((family[pick].0.clone(), p))
}

pub const S3_LABELS: [&str; 8] = ["A", "B", "C", "D", "E", "F", "G", "H"];
pub const Z2_LABELS: [&str; 4] = ["1", "e", "m", "eps"];

/// Labels available at a site, depending on its region.
pub fn site_labels(lat: &Lattice, site: Site) -> Result<Vec<String>> {
    Ok(match site_region(lat, site)? {
        Region::S3 => S3_LABELS.iter().map(|s| s.to_string()).collect(),
        Region::Z2 => Z2_LABELS.iter().map(|s| s.to_string()).collect(),
        Region::Wall => vertex_irrep_labels(lat, site.v)?
            .into_iter()
            .map(|l| format!("K{l}"))
            .collect(),
    })
}

pub fn site_region(lat: &Lattice, site: Site) -> Result<Region> {
    lat.boundary(site)?;
    let vr = lat.vertex_region(site.v);
    Ok(if vr == Region::Wall {
        Region::Wall
    } else {
        lat.plaquette_region(site.p)
    })
}

/// Site projector `P^X` for an anyon label of the site's region.
pub fn particle_projector<T: Real>(
    lat: &Lattice,
    site: Site,
    label: &str,
    disabled: &BTreeSet<VertexId>,
) -> Result<LinearOp<T>> {
    if disabled.contains(&site.v) {
        return Err(QdError::DisabledStabilizer(site.v));
    }
    let region = site_region(lat, site)?;
    let bad = || QdError::LabelRegion {
        label: label.to_string(),
        region: region.to_string(),
    };
    let a = |g: Element| LinearOp::<T>::Vertex { v: site.v, g };
    let b = |h: Element| LinearOp::<T>::Flux { site, h };
    let sum = |terms: Vec<(f64, f64, LinearOp<T>)>| {
        LinearOp::Sum(
            terms
                .into_iter()
                .map(|(re, im, op)| (cplx(re, im), op))
                .collect(),
        )
    };
    match region {
        Region::S3 => {
            let third = 1.0 / 3.0;
            let charge = |coef: &dyn Fn(Element) -> (f64, f64),
                          elems: &[Element],
                          h: Element,
                          scale: f64| {
                b(h).then(sum(elems
                    .iter()
                    .map(|&g| {
                        let (re, im) = coef(g);
                        (re * scale, im * scale, a(g))
                    })
                    .collect()))
            };
            let z3 = [s3::E, s3::C, s3::C2];
            Ok(match label {
                "A" => charge(&|_| (1.0, 0.0), &s3::ALL, s3::E, 1.0 / 6.0),
                "B" => charge(&|g| (s3::sign(g) as f64, 0.0), &s3::ALL, s3::E, 1.0 / 6.0),
                "C" => charge(
                    &|g| (if g == s3::E { 2.0 } else { -1.0 }, 0.0),
                    &z3,
                    s3::E,
                    third,
                ),
                "D" | "E" => {
                    let sgn = if label == "D" { 1.0 } else { -1.0 };
                    LinearOp::Sum(
                        [s3::T, s3::CT, s3::C2T]
                            .iter()
                            .map(|&h| {
                                (
                                    real(1.0),
                                    charge(
                                        &|g| (if g == s3::E { 1.0 } else { sgn }, 0.0),
                                        &[s3::E, h],
                                        h,
                                        0.5,
                                    ),
                                )
                            })
                            .collect(),
                    )
                }
                "F" | "G" | "H" => {
                    // Phase of A^{c^k} given flux c is ω^{kq}; flux c² picks up the conjugate.
                    let q = match label {
                        "F" => 0i32,
                        "G" => 1,
                        _ => -1,
                    };
                    let phase = move |k: i32| {
                        let t = 2.0 * std::f64::consts::PI * (k * q) as f64 / 3.0;
                        (t.cos(), t.sin())
                    };
                    let for_c = charge(
                        &|g| {
                            phase(match g {
                                s3::E => 0,
                                s3::C => 1,
                                _ => 2,
                            })
                        },
                        &z3,
                        s3::C,
                        third,
                    );
                    let for_c2 = charge(
                        &|g| {
                            phase(match g {
                                s3::E => 0,
                                s3::C => 2,
                                _ => 1,
                            })
                        },
                        &z3,
                        s3::C2,
                        third,
                    );
                    LinearOp::Sum(vec![(real(1.0), for_c), (real(1.0), for_c2)])
                }
                _ => return Err(bad()),
            })
        }
        Region::Z2 => {
            let x = ambient::X;
            let (flux, sign) = match label {
                "1" => (Element::IDENTITY, 1.0),
                "e" => (Element::IDENTITY, -1.0),
                "m" => (x, 1.0),
                "eps" => (x, -1.0),
                _ => return Err(bad()),
            };
            Ok(b(flux).then(sum(vec![
                (0.5, 0.0, a(Element::IDENTITY)),
                (0.5 * sign, 0.0, a(x)),
            ])))
        }
        Region::Wall => {
            let labels = vertex_irrep_labels(lat, site.v)?;
            let k = labels
                .iter()
                .position(|l| format!("K{l}") == label)
                .ok_or_else(bad)?;
            vertex_charge(lat, site.v, k)
        }
    }
}

/// Every label's projector at a site.
pub fn particle_family<T: Real>(
    lat: &Lattice,
    site: Site,
    disabled: &BTreeSet<VertexId>,
) -> Result<Vec<(String, LinearOp<T>)>> {
    site_labels(lat, site)?
        .into_iter()
        .map(|l| {
            let op = particle_projector(lat, site, &l, disabled)?;
            Ok((l, op))
        })
        .collect()
}

/// Projector onto a plaquette's flux lying in the class of `h`.
pub fn flux_class<T: Real>(lat: &Lattice, p: PlaqId, h: Element) -> LinearOp<T> {
    let region = lat.plaquette_region(p);
    let members: Vec<Element> = (0..12u8)
        .map(Element)
        .filter(|&g| lat.project(region, g) == g)
        .map(|g| ambient::conj(g, h))
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    LinearOp::FluxIn {
        p,
        set: Arc::new(members),
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SiteReport {
    pub plaquette: PlaqId,
    pub vertex: VertexId,
    pub label: String,
    pub probability: f64,
}

/// Most likely anyon label at every canonical site whose vertex is not a hole.
/// Non-root sites of a gauge-framed state are gauge invariant at their vertex,
/// so only their flux class is measured.
pub fn syndrome_scan<T: Real>(
    state: &SparseState<T>,
    disabled: &BTreeSet<VertexId>,
) -> Result<Vec<SiteReport>> {
    let lat = state.lattice().clone();
    let mut out = Vec::new();
    for site in lat.canonical_sites() {
        if disabled.contains(&site.v) {
            continue;
        }
        let (label, prob) = if state.is_root(site.v) {
            let fam = particle_family::<T>(&lat, site, disabled)?;
            let probs = family_probabilities(state, &fam, 1e-6)?;
            probs
                .into_iter()
                .map(|(l, p)| (l, p.to_f64().unwrap()))
                .fold((String::new(), -1.0), |best, cur| {
                    if cur.1 > best.1 {
                        cur
                    } else {
                        best
                    }
                })
        } else {
            let region = site_region(&lat, site)?;
            let classes: Vec<(Element, &str)> = match region {
                Region::Z2 => vec![(Element::IDENTITY, "1"), (ambient::X, "m")],
                _ => vec![(s3::E, "A"), (s3::T, "D"), (s3::C, "F")],
            };
            let mut best = (String::new(), -1.0);
            for (h, l) in classes {
                let p = probability(state, &flux_class::<T>(&lat, site.p, h))?
                    .to_f64()
                    .unwrap();
                if p > best.1 {
                    best = (l.to_string(), p);
                }
            }
            best
        };
        if label != "A" && label != "1" || prob < 1.0 - 1e-9 {
            out.push(SiteReport {
                plaquette: site.p,
                vertex: site.v,
                label,
                probability: prob,
            });
        }
    }
    Ok(out)
}

/// `1` as an operator coefficient.
pub fn one<T: Real>() -> Complex<T> {
    Complex::one()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::LatticeSpec;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn random_state(lat: &Arc<Lattice>, seed: u64) -> SparseState<f64> {
        SparseState::random(lat.clone(), 24, &mut ChaCha8Rng::seed_from_u64(seed))
    }

    fn close(a: &SparseState<f64>, b: &SparseState<f64>) -> bool {
        let mut d = a.clone();
        d.add_scaled(real(-1.0), b).unwrap();
        d.norm() < 1e-10
    }

    #[test]
    fn ground_state_is_stabilized() {
        let lat = Arc::new(LatticeSpec::torus(2, 2).build().unwrap());
        let g = ground_state::<f64>(lat.clone(), None).unwrap();
        assert_eq!(g.len(), 216);
        for (_, op) in stabilizers::<f64>(&lat, &BTreeSet::new()) {
            assert!((expectation(&g, &op).unwrap().re - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn particle_family_is_complete_and_orthogonal() {
        let lat = Arc::new(LatticeSpec::torus(3, 3).build().unwrap());
        let psi = random_state(&lat, 1);
        let site = lat.canonical_site(4);
        let fam = particle_family::<f64>(&lat, site, &BTreeSet::new()).unwrap();
        let mut sum = psi.zero_like();
        for (_, op) in &fam {
            sum.add_scaled(real(1.0), &op.applied(&psi).unwrap())
                .unwrap();
        }
        assert!(close(&sum, &psi));
        for (i, (_, p)) in fam.iter().enumerate() {
            let once = p.applied(&psi).unwrap();
            assert!(close(&p.applied(&once).unwrap(), &once));
            for (j, (_, q)) in fam.iter().enumerate() {
                if i != j {
                    assert!(q.applied(&once).unwrap().norm() < 1e-10);
                }
            }
        }
    }

    #[test]
    fn z2_family_on_toric_code() {
        let lat = Arc::new(LatticeSpec::torus(3, 3).z2().build().unwrap());
        let psi = random_state(&lat, 2);
        let site = lat.canonical_site(0);
        let fam = particle_family::<f64>(&lat, site, &BTreeSet::new()).unwrap();
        assert_eq!(fam.len(), 4);
        let total: f64 = family_probabilities(&psi, &fam, 1e-9)
            .unwrap()
            .iter()
            .map(|x| x.1)
            .sum();
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn label_region_mismatch() {
        let lat = LatticeSpec::torus(2, 2).z2().build().unwrap();
        let r = particle_projector::<f64>(&lat, lat.canonical_site(0), "G", &BTreeSet::new());
        assert!(matches!(r, Err(QdError::LabelRegion { .. })));
        let holes = BTreeSet::from([lat.canonical_site(0).v]);
        let r = particle_projector::<f64>(&lat, lat.canonical_site(0), "e", &holes);
        assert!(matches!(r, Err(QdError::DisabledStabilizer(_))));
    }

    #[test]
    fn gauge_mode_rejects_anchored_ops_off_root() {
        let lat = Arc::new(LatticeSpec::torus(2, 2).build().unwrap());
        let mut g = ground_state::<f64>(lat.clone(), Some(&BTreeSet::from([0]))).unwrap();
        let site = lat.canonical_site(0);
        let op = LinearOp::<f64>::Flux {
            site,
            h: Element::IDENTITY,
        };
        assert!(matches!(op.apply(&mut g), Err(QdError::GaugeViolation(_))));
    }

    #[test]
    fn gauge_and_full_ground_states_agree() {
        let lat = Arc::new(LatticeSpec::torus(2, 2).build().unwrap());
        let full = ground_state::<f64>(lat.clone(), None).unwrap();
        let gauge = ground_state::<f64>(lat.clone(), Some(&BTreeSet::from([0, 3]))).unwrap();
        assert!((gauge.to_full().unwrap().fidelity(&full).unwrap() - 1.0).abs() < 1e-12);
    }
}
