//! Sparse state vectors over edge configurations, with an optional gauge frame
//! that stores only one representative per orbit of the vertex gauge group.
//!
//! With a frame, every vertex that is not a root has a parent edge fixed to
//! the identity. A physical state invariant under the gauge at all non-root
//! vertices is then stored as `R(c) = sqrt(|G|) ψ(c)` on reduced
//! configurations, which makes the reduction an isometry.

use std::collections::BTreeSet;
use std::sync::Arc;

use num_traits::{One, Zero};
use rand::Rng;
use rustc_hash::FxHashMap;

use crate::error::{QdError, Result};
use crate::group::{ambient, Element};
use crate::lattice::{EdgeId, Lattice, Site, VertexId};
use crate::{Complex, Real};

pub const KEY_WORDS: usize = 8;
/// Number of 4-bit slots in a configuration key: lattice edges plus ancillas.
pub const MAX_SLOTS: usize = KEY_WORDS * 16;

/// Packed basis label: slot `i` holds an element index in 4 bits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Config(pub [u64; KEY_WORDS]);

impl Config {
    #[inline]
    pub fn get(&self, slot: usize) -> Element {
        Element(((self.0[slot >> 4] >> ((slot & 15) * 4)) & 0xF) as u8)
    }

    #[inline]
    pub fn set(&mut self, slot: usize, value: Element) {
        let (w, s) = (slot >> 4, (slot & 15) * 4);
        self.0[w] = (self.0[w] & !(0xF << s)) | ((value.0 as u64 & 0xF) << s);
    }

    pub fn render(&self, slots: usize) -> String {
        (0..slots)
            .map(|i| char::from_digit(self.get(i).0 as u32, 16).unwrap())
            .collect()
    }
}

/// Basis-level kernels shared by operators, ribbons and the gauge frame.
pub mod kernel {
    use super::Config;
    use crate::group::{ambient, Element};
    use crate::lattice::{EdgeId, Lattice, Site, VertexId};

    /// `x ↦ g·x` with `g` projected onto the edge's factor.
    #[inline]
    pub fn left(lat: &Lattice, cfg: &mut Config, e: EdgeId, g: Element) {
        let g = lat.project(lat.edge_region(e), g);
        cfg.set(e, ambient::mul(g, cfg.get(e)));
    }

    /// `x ↦ x·g` with `g` projected onto the edge's factor.
    #[inline]
    pub fn right(lat: &Lattice, cfg: &mut Config, e: EdgeId, g: Element) {
        let g = lat.project(lat.edge_region(e), g);
        cfg.set(e, ambient::mul(cfg.get(e), g));
    }

    /// Gauge transformation `A_v^g`.
    pub fn vertex(lat: &Lattice, cfg: &mut Config, v: VertexId, g: Element) {
        let gi = ambient::inv(g);
        for (e, toward) in lat.star(v) {
            if toward {
                left(lat, cfg, e, g);
            } else {
                right(lat, cfg, e, gi);
            }
        }
    }

    /// Flux through the plaquette of `site`, read counterclockwise from its vertex.
    pub fn flux(lat: &Lattice, cfg: &Config, site: Site) -> Element {
        let ring = lat.boundary(site).expect("valid site");
        let mut acc = Element::IDENTITY;
        for (e, ccw) in ring {
            let x = cfg.get(e);
            acc = ambient::mul(acc, if ccw { ambient::inv(x) } else { x });
        }
        lat.project(lat.plaquette_region(site.p), acc)
    }
}

/// Spanning forest that fixes the gauge at every non-root vertex.
#[derive(Debug, Clone, PartialEq)]
pub struct GaugeFrame {
    roots: BTreeSet<VertexId>,
    /// Non-root vertices in top-down order with their parent edge.
    order: Vec<(VertexId, EdgeId)>,
    /// For each entry of `order`: gauge element sending a parent-edge value to the identity.
    fix: Vec<[u8; 12]>,
    log_group_order: f64,
}

impl GaugeFrame {
    pub fn new(lat: &Lattice, roots: &BTreeSet<VertexId>) -> Result<Self> {
        if roots.is_empty() {
            return Err(QdError::Schedule(
                "a gauge frame needs at least one root".into(),
            ));
        }
        let n = lat.num_vertices();
        let mut seen = vec![false; n];
        let mut queue = std::collections::VecDeque::new();
        let mut all_roots = roots.clone();
        for &r in roots {
            if r >= n {
                return Err(QdError::Schedule(format!("root {r} out of range")));
            }
            seen[r] = true;
            queue.push_back(r);
        }
        let mut order = Vec::new();
        let mut fix = Vec::new();
        let mut log_group_order = 0.0;
        // Grow the forest breadth first; a vertex may only hang from an edge on
        // which its gauge group acts freely and transitively. A component that
        // cannot be entered that way (the S3 side seen from a Z2 root) gets an
        // extra root, preferring wall vertices.
        loop {
            while let Some(u) = queue.pop_front() {
                for (e, _) in lat.star(u) {
                    let ed = lat.edge(e);
                    let w = if ed.tail == u { ed.head } else { ed.tail };
                    if seen[w] {
                        continue;
                    }
                    if let Some(table) = Self::fix_table(lat, w, e) {
                        seen[w] = true;
                        order.push((w, e));
                        fix.push(table);
                        log_group_order += (lat.gauge_group(w).len() as f64).ln();
                        queue.push_back(w);
                    }
                }
            }
            let unseen = (0..n).filter(|&v| !seen[v]);
            let pick = unseen
                .clone()
                .find(|&v| lat.vertex_region(v) == crate::lattice::Region::Wall)
                .or_else(|| unseen.clone().next());
            match pick {
                None => break,
                Some(v) => {
                    seen[v] = true;
                    all_roots.insert(v);
                    queue.push_back(v);
                }
            }
        }
        let roots = &all_roots;
        Ok(Self {
            roots: roots.clone(),
            order,
            fix,
            log_group_order,
        })
    }

    fn fix_table(lat: &Lattice, w: VertexId, e: EdgeId) -> Option<[u8; 12]> {
        let allowed = lat.allowed_values(e);
        let group = lat.gauge_group(w);
        if group.len() != allowed.len() {
            return None;
        }
        let toward = lat.edge(e).head == w;
        let mut table = [u8::MAX; 12];
        for &g in group {
            let pg = lat.project(lat.edge_region(e), g);
            // Value x that this g sends to the identity.
            let x = if toward { ambient::inv(pg) } else { pg };
            if !allowed.contains(&x) || table[x.index()] != u8::MAX {
                return None;
            }
            table[x.index()] = g.0;
        }
        Some(table)
    }

    pub fn roots(&self) -> &BTreeSet<VertexId> {
        &self.roots
    }

    pub fn is_root(&self, v: VertexId) -> bool {
        self.roots.contains(&v)
    }

    pub fn forest_edges(&self) -> impl Iterator<Item = EdgeId> + '_ {
        self.order.iter().map(|&(_, e)| e)
    }

    /// Natural log of the order of the gauge group at non-root vertices.
    pub fn log_group_order(&self) -> f64 {
        self.log_group_order
    }

    /// Moves a configuration to the representative of its gauge orbit.
    pub fn reduce(&self, lat: &Lattice, cfg: &mut Config) {
        for (k, &(v, e)) in self.order.iter().enumerate() {
            let x = cfg.get(e);
            if x != Element::IDENTITY {
                kernel::vertex(lat, cfg, v, Element(self.fix[k][x.index()]));
            }
        }
    }
}

/// Sparse vector of complex amplitudes over configurations.
#[derive(Debug, Clone)]
pub struct SparseState<T: Real> {
    lattice: Arc<Lattice>,
    frame: Option<Arc<GaugeFrame>>,
    ancillas: Vec<usize>,
    amps: FxHashMap<Config, Complex<T>>,
    pruned: T,
}

impl<T: Real> SparseState<T> {
    pub fn zero(lattice: Arc<Lattice>) -> Self {
        Self {
            lattice,
            frame: None,
            ancillas: Vec::new(),
            amps: FxHashMap::default(),
            pruned: T::zero(),
        }
    }

    pub fn basis(lattice: Arc<Lattice>, cfg: Config) -> Self {
        let mut s = Self::zero(lattice);
        s.amps.insert(cfg, Complex::one());
        s
    }

    /// All-identity representative in a gauge frame with the given roots: the
    /// equal superposition over the gauge orbit at non-root vertices.
    pub fn gauge_identity(lattice: Arc<Lattice>, roots: &BTreeSet<VertexId>) -> Result<Self> {
        let frame = Arc::new(GaugeFrame::new(&lattice, roots)?);
        let mut s = Self::basis(lattice, Config::default());
        s.frame = Some(frame);
        Ok(s)
    }

    /// Configuration with every edge at the identity.
    pub fn identity_config(lattice: Arc<Lattice>) -> Self {
        Self::basis(lattice, Config::default())
    }

    pub fn zero_like(&self) -> Self {
        Self {
            lattice: self.lattice.clone(),
            frame: self.frame.clone(),
            ancillas: self.ancillas.clone(),
            amps: FxHashMap::default(),
            pruned: T::zero(),
        }
    }

    /// Random normalized superposition of `n` configurations drawn uniformly
    /// from each edge's allowed values. Used to test operator identities.
    pub fn random<R: Rng>(lattice: Arc<Lattice>, n: usize, rng: &mut R) -> Self {
        let mut s = Self::zero(lattice.clone());
        for _ in 0..n {
            let mut cfg = Config::default();
            for e in 0..lattice.num_edges() {
                let vals = lattice.allowed_values(e);
                cfg.set(e, vals[rng.gen_range(0..vals.len())]);
            }
            let a = Complex::new(T::c(rng.gen::<f64>() - 0.5), T::c(rng.gen::<f64>() - 0.5));
            *s.amps.entry(cfg).or_insert_with(Complex::zero) += a;
        }
        let _ = s.normalize();
        s
    }

    pub fn lattice(&self) -> &Arc<Lattice> {
        &self.lattice
    }

    pub fn frame(&self) -> Option<&Arc<GaugeFrame>> {
        self.frame.as_ref()
    }

    pub fn is_root(&self, v: VertexId) -> bool {
        self.frame.as_ref().map_or(true, |f| f.is_root(v))
    }

    pub fn num_slots(&self) -> usize {
        self.lattice.num_edges() + self.ancillas.len()
    }

    pub fn ancilla_dims(&self) -> &[usize] {
        &self.ancillas
    }

    /// Appends an ancilla slot initialised to index 0 and returns its slot.
    pub fn add_ancilla(&mut self, dim: usize) -> Result<usize> {
        let slot = self.num_slots();
        if slot >= MAX_SLOTS {
            return Err(QdError::Resource(format!(
                "configuration keys hold at most {MAX_SLOTS} slots"
            )));
        }
        if dim == 0 || dim > 12 {
            return Err(QdError::DimensionMismatch {
                slot,
                detail: format!("ancilla dimension {dim}"),
            });
        }
        self.ancillas.push(dim);
        Ok(slot)
    }

    /// Removes the most recent ancilla, which must hold the same value in every configuration.
    pub fn drop_ancilla(&mut self) -> Result<()> {
        let slot = self.num_slots() - 1;
        if self.ancillas.is_empty() {
            return Err(QdError::Schedule("no ancilla to drop".into()));
        }
        let mut out = FxHashMap::default();
        let mut value = None;
        for (cfg, a) in self.amps.drain() {
            let v = cfg.get(slot);
            if *value.get_or_insert(v) != v {
                return Err(QdError::Schedule("ancilla is still entangled".into()));
            }
            let mut c = cfg;
            c.set(slot, Element::IDENTITY);
            out.insert(c, a);
        }
        self.amps = out;
        self.ancillas.pop();
        Ok(())
    }

    pub fn slot_dim(&self, slot: usize) -> usize {
        let ne = self.lattice.num_edges();
        if slot < ne {
            self.lattice.allowed_values(slot).len()
        } else {
            self.ancillas[slot - ne]
        }
    }

    pub fn len(&self) -> usize {
        self.amps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.amps.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Config, &Complex<T>)> {
        self.amps.iter()
    }

    pub fn amplitude(&self, cfg: &Config) -> Complex<T> {
        self.amps.get(cfg).copied().unwrap_or_else(Complex::zero)
    }

    pub fn insert(&mut self, cfg: Config, amp: Complex<T>) {
        let mut cfg = cfg;
        if let Some(f) = &self.frame {
            f.reduce(&self.lattice, &mut cfg);
        }
        *self.amps.entry(cfg).or_insert_with(Complex::zero) += amp;
    }

    pub fn norm_sqr(&self) -> T {
        self.amps
            .values()
            .fold(T::zero(), |acc, a| acc + a.norm_sqr())
    }

    pub fn norm(&self) -> T {
        self.norm_sqr().sqrt()
    }

    /// Rescales to unit norm and returns the previous norm.
    pub fn normalize(&mut self) -> Result<T> {
        let n = self.norm();
        if n <= T::min_positive_value() || !n.is_finite() {
            return Err(QdError::ZeroNorm("normalization".into()));
        }
        let inv = T::one() / n;
        for a in self.amps.values_mut() {
            *a = *a * inv;
        }
        Ok(n)
    }

    pub fn scale(&mut self, c: Complex<T>) {
        for a in self.amps.values_mut() {
            *a = *a * c;
        }
    }

    fn compatible(&self, other: &Self) -> Result<()> {
        let same_lattice =
            Arc::ptr_eq(&self.lattice, &other.lattice) || *self.lattice == *other.lattice;
        let same_frame = match (&self.frame, &other.frame) {
            (None, None) => true,
            (Some(a), Some(b)) => Arc::ptr_eq(a, b) || a.roots == b.roots && a.order == b.order,
            _ => false,
        };
        if !same_lattice || !same_frame || self.ancillas != other.ancillas {
            return Err(QdError::LatticeMismatch);
        }
        Ok(())
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &Self) -> Result<Complex<T>> {
        self.compatible(other)?;
        let (small, large, conj_small) = if self.len() <= other.len() {
            (self, other, true)
        } else {
            (other, self, false)
        };
        let mut acc = Complex::zero();
        for (cfg, a) in &small.amps {
            if let Some(b) = large.amps.get(cfg) {
                acc = acc
                    + if conj_small {
                        a.conj() * b
                    } else {
                        b.conj() * a
                    };
            }
        }
        Ok(acc)
    }

    /// `|⟨self|other⟩|² / (‖self‖² ‖other‖²)`.
    pub fn fidelity(&self, other: &Self) -> Result<T> {
        let ip = self.inner(other)?;
        Ok(ip.norm_sqr() / (self.norm_sqr() * other.norm_sqr()))
    }

    /// `self += c · other`.
    pub fn add_scaled(&mut self, c: Complex<T>, other: &Self) -> Result<()> {
        self.compatible(other)?;
        for (cfg, a) in &other.amps {
            *self.amps.entry(*cfg).or_insert_with(Complex::zero) += *a * c;
        }
        Ok(())
    }

    /// Drops amplitudes with squared modulus below `eps`, accumulating the lost weight.
    pub fn prune(&mut self, eps: T) {
        let mut lost = T::zero();
        self.amps.retain(|_, a| {
            let w = a.norm_sqr();
            if w < eps {
                lost = lost + w;
                false
            } else {
                true
            }
        });
        self.pruned = self.pruned + lost;
    }

    pub fn pruned_weight(&self) -> T {
        self.pruned
    }

    /// Replaces the state by the image of every configuration under `f`,
    /// reducing outputs into the gauge frame.
    pub fn map_configs<F>(&mut self, mut f: F)
    where
        F: FnMut(&Config, Complex<T>, &mut dyn FnMut(Config, Complex<T>)),
    {
        let mut out: FxHashMap<Config, Complex<T>> =
            FxHashMap::with_capacity_and_hasher(self.amps.len(), Default::default());
        let frame = self.frame.clone();
        let lat = self.lattice.clone();
        for (cfg, a) in self.amps.iter() {
            f(cfg, *a, &mut |mut c, amp| {
                if let Some(fr) = &frame {
                    fr.reduce(&lat, &mut c);
                }
                *out.entry(c).or_insert_with(Complex::zero) += amp;
            });
        }
        out.retain(|_, a| a.norm_sqr() > T::zero());
        self.amps = out;
    }

    /// Deterministic listing of nonzero amplitudes, sorted by configuration.
    pub fn dump(&self) -> Vec<(String, f64, f64)> {
        let mut v: Vec<_> = self
            .amps
            .iter()
            .map(|(c, a)| {
                (
                    c.render(self.num_slots()),
                    a.re.to_f64().unwrap(),
                    a.im.to_f64().unwrap(),
                )
            })
            .collect();
        v.sort_by(|a, b| a.0.cmp(&b.0));
        v
    }

    /// Switches to a gauge frame with the given roots (`None` means every
    /// vertex is a root). Returns the squared norm retained, which is below
    /// one when removed roots carried a nontrivial charge: that part of the
    /// state is projected out.
    pub fn set_roots(&mut self, roots: Option<&BTreeSet<VertexId>>) -> Result<T> {
        let lat = self.lattice.clone();
        let all: BTreeSet<VertexId> = (0..lat.num_vertices()).collect();
        let roots_of =
            |f: &Option<Arc<GaugeFrame>>| f.as_ref().map_or(all.clone(), |f| f.roots.clone());
        let old = roots_of(&self.frame);
        let frame_n = Self::make_frame(&lat, roots.unwrap_or(&all), &all)?;
        // The new frame may carry extra roots needed to reach every vertex.
        let target = roots_of(&frame_n);
        let before = self.norm_sqr();
        let union: BTreeSet<VertexId> = old.union(&target).copied().collect();
        if union != old {
            let frame_u = Self::make_frame(&lat, &union, &all)?;
            let added: Vec<VertexId> = union.difference(&old).copied().collect();
            let orbit = gauge_orbit(&lat, &added);
            let w = T::one() / T::c(orbit.len() as f64).sqrt();
            let mut out = FxHashMap::default();
            for (cfg, a) in &self.amps {
                for gs in &orbit {
                    let mut c = *cfg;
                    for (&v, &g) in added.iter().zip(gs) {
                        kernel::vertex(&lat, &mut c, v, g);
                    }
                    if let Some(f) = &frame_u {
                        f.reduce(&lat, &mut c);
                    }
                    *out.entry(c).or_insert_with(Complex::zero) += *a * w;
                }
            }
            self.amps = out;
            self.frame = frame_u;
        }
        if target != union {
            let removed: Vec<VertexId> = union.difference(&target).copied().collect();
            let size: usize = removed.iter().map(|&v| lat.gauge_group(v).len()).product();
            let w = T::one() / T::c(size as f64).sqrt();
            let mut out = FxHashMap::default();
            for (cfg, a) in &self.amps {
                let mut c = *cfg;
                if let Some(f) = &frame_n {
                    f.reduce(&lat, &mut c);
                }
                *out.entry(c).or_insert_with(Complex::zero) += *a * w;
            }
            out.retain(|_, a: &mut Complex<T>| a.norm_sqr() > T::c(1e-300));
            self.amps = out;
        }
        self.frame = frame_n;
        let after = self.norm_sqr();
        Ok(if before > T::zero() {
            after / before
        } else {
            T::one()
        })
    }

    fn make_frame(
        lat: &Lattice,
        roots: &BTreeSet<VertexId>,
        all: &BTreeSet<VertexId>,
    ) -> Result<Option<Arc<GaugeFrame>>> {
        if roots == all {
            Ok(None)
        } else {
            Ok(Some(Arc::new(GaugeFrame::new(lat, roots)?)))
        }
    }

    pub fn add_roots(&mut self, vs: &[VertexId]) -> Result<()> {
        if let Some(f) = &self.frame {
            let mut r = f.roots.clone();
            r.extend(vs.iter().copied());
            self.set_roots(Some(&r))?;
        }
        Ok(())
    }

    /// Removes roots, projecting each onto gauge invariance. Returns the retained weight.
    pub fn remove_roots(&mut self, vs: &[VertexId]) -> Result<T> {
        let lat = self.lattice.clone();
        let mut r: BTreeSet<VertexId> = match &self.frame {
            Some(f) => f.roots.clone(),
            None => (0..lat.num_vertices()).collect(),
        };
        for v in vs {
            r.remove(v);
        }
        self.set_roots(Some(&r))
    }

    /// Same physical state expanded over every vertex gauge (no frame).
    pub fn to_full(&self) -> Result<Self> {
        let mut s = self.clone();
        s.set_roots(None)?;
        Ok(s)
    }

    /// Value of `flux` at `site` is only meaningful per configuration; this
    /// helper exposes the kernel for diagnostics.
    pub fn flux_of(&self, cfg: &Config, site: Site) -> Element {
        kernel::flux(&self.lattice, cfg, site)
    }
}

/// Every tuple of gauge elements at the listed vertices.
pub fn gauge_orbit(lat: &Lattice, vs: &[VertexId]) -> Vec<Vec<Element>> {
    let mut out = vec![Vec::new()];
    for &v in vs {
        let mut next = Vec::with_capacity(out.len() * lat.gauge_group(v).len());
        for prefix in &out {
            for &g in lat.gauge_group(v) {
                let mut t = prefix.clone();
                t.push(g);
                next.push(t);
            }
        }
        out = next;
    }
    out
}
