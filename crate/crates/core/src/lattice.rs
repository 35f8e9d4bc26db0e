//! Square-lattice geometry: tori and open patches, the ℤ₂ / wall / S₃ region
//! map, sites, triangles and ribbons.
//!
//! Vertices sit at integer points `(x, y)`. Horizontal edges point right and
//! vertical edges point up. Around a vertex the four edge directions are
//! numbered counterclockwise `0 = right, 1 = up, 2 = left, 3 = down`, and the
//! four plaquette quadrants `0 = above-right, …, 3 = below-right`, so quadrant
//! `q` lies between directions `q` and `q + 1`.

use std::collections::{BTreeSet, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};
use smallvec::SmallVec;

use crate::error::{QdError, Result};
use crate::group::{ambient, Element, Subgroup};

pub type VertexId = usize;
pub type EdgeId = usize;
pub type PlaqId = usize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Region {
    Z2,
    S3,
    Wall,
}

impl fmt::Display for Region {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Region::Z2 => "Z2",
            Region::S3 => "S3",
            Region::Wall => "wall",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Boundary {
    #[default]
    Torus,
    Open,
}

/// How wall edges are represented.
///
/// `Merged` stores a single value in `K` per wall edge, which is the state
/// space left after the wall plaquette terms are imposed. `Paired` keeps the
/// full ℤ₂ × S₃ pair and enforces `K` through explicit wall plaquette terms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum WallRep {
    #[default]
    Merged,
    Paired,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Layout {
    #[default]
    S3,
    Z2,
    Hybrid,
}

/// Serializable lattice description, as read from configuration files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LatticeSpec {
    pub width: usize,
    pub height: usize,
    #[serde(default)]
    pub boundary: Boundary,
    #[serde(default)]
    pub layout: Layout,
    /// Vertex column carrying the wall (hybrid layout only).
    #[serde(default)]
    pub wall_column: Option<usize>,
    /// Label 1 to 10 of the wall subgroup; defaults to 9.
    #[serde(default)]
    pub wall_subgroup: Option<usize>,
    #[serde(default)]
    pub wall_rep: WallRep,
    /// Explicit region of every vertex column; overrides `layout`.
    #[serde(default)]
    pub columns: Option<Vec<Region>>,
}

impl LatticeSpec {
    pub fn torus(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            boundary: Boundary::Torus,
            layout: Layout::S3,
            wall_column: None,
            wall_subgroup: None,
            wall_rep: WallRep::Merged,
            columns: None,
        }
    }

    pub fn open(width: usize, height: usize) -> Self {
        Self {
            boundary: Boundary::Open,
            ..Self::torus(width, height)
        }
    }

    pub fn z2(mut self) -> Self {
        self.layout = Layout::Z2;
        self
    }

    pub fn hybrid(mut self, wall_column: usize, subgroup: usize) -> Self {
        self.layout = Layout::Hybrid;
        self.wall_column = Some(wall_column);
        self.wall_subgroup = Some(subgroup);
        self
    }

    pub fn paired(mut self) -> Self {
        self.wall_rep = WallRep::Paired;
        self
    }

    pub fn build(&self) -> Result<Lattice> {
        Lattice::new(self)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Edge {
    pub tail: VertexId,
    pub head: VertexId,
    pub horizontal: bool,
    pub x: usize,
    pub y: usize,
    pub region: Region,
}

/// A site is a plaquette together with one of its corner vertices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Site {
    pub p: PlaqId,
    pub v: VertexId,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum TriangleKind {
    Dual,
    Direct,
}

/// One triangle of a ribbon. For a dual triangle `aligned` means the crossed
/// edge points toward the shared vertex; for a direct triangle it means the
/// edge points along the direction of traversal.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Triangle {
    pub kind: TriangleKind,
    pub from: Site,
    pub to: Site,
    pub edge: EdgeId,
    pub aligned: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Ribbon {
    pub triangles: Vec<Triangle>,
    pub start: Site,
    pub end: Site,
}

impl Ribbon {
    pub fn is_closed(&self) -> bool {
        self.start == self.end && !self.triangles.is_empty()
    }

    pub fn edges(&self) -> impl Iterator<Item = EdgeId> + '_ {
        self.triangles.iter().map(|t| t.edge)
    }

    pub fn len(&self) -> usize {
        self.triangles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.triangles.is_empty()
    }

    /// Concatenates two ribbons whose end and start sites agree.
    pub fn then(&self, next: &Ribbon) -> Result<Ribbon> {
        if self.end != next.start {
            return Err(QdError::RibbonPath(format!(
                "cannot glue ribbon ending at {:?} to one starting at {:?}",
                self.end, next.start
            )));
        }
        let mut triangles = self.triangles.clone();
        triangles.extend(next.triangles.iter().copied());
        let r = Ribbon {
            triangles,
            start: self.start,
            end: next.end,
        };
        r.check_distinct()?;
        Ok(r)
    }

    pub fn check_distinct(&self) -> Result<()> {
        let mut seen = BTreeSet::new();
        for t in &self.triangles {
            if !seen.insert(t.edge) {
                return Err(QdError::RibbonGeometry(format!(
                    "edge {} is used by two triangles",
                    t.edge
                )));
            }
        }
        Ok(())
    }
}

/// Vertex rectangle `[x0, x1] × [y0, y1]` used for closed ribbons and regions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rect {
    pub x0: usize,
    pub y0: usize,
    pub x1: usize,
    pub y1: usize,
}

impl Rect {
    pub fn new(x0: usize, y0: usize, x1: usize, y1: usize) -> Self {
        Self { x0, y0, x1, y1 }
    }

    pub fn point(x: usize, y: usize) -> Self {
        Self::new(x, y, x, y)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WallInfo {
    pub column: usize,
    pub label: usize,
    pub subgroup: Subgroup,
    pub rep: WallRep,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Lattice {
    pub spec: LatticeSpec,
    pub nx: usize,
    pub ny: usize,
    torus: bool,
    edges: Vec<Edge>,
    vertex_region: Vec<Region>,
    plaq_region: Vec<Region>,
    /// Per vertex, edge in each direction (0 right, 1 up, 2 left, 3 down).
    vedges: Vec<[Option<EdgeId>; 4]>,
    /// Per vertex, plaquette in each quadrant.
    vplaqs: Vec<[Option<PlaqId>; 4]>,
    /// Per plaquette: bottom, right, top, left edges.
    pedges: Vec<[EdgeId; 4]>,
    /// Per plaquette: bottom-left, bottom-right, top-right, top-left vertices.
    pcorners: Vec<[VertexId; 4]>,
    pcoords: Vec<(usize, usize)>,
    allowed: Vec<Vec<Element>>,
    gauge: Vec<Vec<Element>>,
    hindex: Vec<Option<EdgeId>>,
    vindex: Vec<Option<EdgeId>>,
    pub wall: Option<WallInfo>,
}

const Z2_VALUES: [Element; 2] = [Element(0), Element(6)];

impl Lattice {
    pub fn new(spec: &LatticeSpec) -> Result<Self> {
        let (w, h) = (spec.width, spec.height);
        let torus = spec.boundary == Boundary::Torus;
        if w == 0 || h == 0 {
            return Err(QdError::Lattice("width and height must be positive".into()));
        }
        if torus && (w < 2 || h < 2) {
            return Err(QdError::Lattice(format!(
                "a {w}x{h} torus has self-loop edges; use at least 2x2"
            )));
        }
        let (nx, ny) = if torus { (w, h) } else { (w + 1, h + 1) };
        let edges = if torus { 2 * nx * ny } else { nx * h + ny * w };
        if edges > crate::state::MAX_SLOTS {
            return Err(QdError::Resource(format!(
                "{edges} edges exceed the {} slots of a configuration key",
                crate::state::MAX_SLOTS
            )));
        }
        let columns = Self::column_regions(spec, nx)?;
        let mut wall = None;
        if let Some(col) = columns.iter().position(|&r| r == Region::Wall) {
            let label = spec.wall_subgroup.unwrap_or(9);
            let subgroup = ambient::table_subgroup(label).ok_or_else(|| {
                QdError::Lattice(format!("wall subgroup label {label} is not in 1..=10"))
            })?;
            wall = Some(WallInfo {
                column: col,
                label,
                subgroup,
                rep: spec.wall_rep,
            });
        }

        let vid = |x: usize, y: usize| y * nx + x;
        let mut edges = Vec::new();
        let mut hindex = vec![None; nx * ny];
        let mut vindex = vec![None; nx * ny];
        let hx = if torus { nx } else { nx - 1 };
        let vy = if torus { ny } else { ny - 1 };
        for y in 0..ny {
            for x in 0..hx {
                let x2 = (x + 1) % nx;
                let name = format!("h({x},{y})");
                let region = match (columns[x], columns[x2]) {
                    (a, b) if a == b && a != Region::Wall => a,
                    (Region::Wall, Region::Wall) => {
                        return Err(QdError::RegionMap {
                            edge: name,
                            reason: "joins two wall vertices".into(),
                        })
                    }
                    (Region::Wall, r) | (r, Region::Wall) => r,
                    (a, b) => {
                        return Err(QdError::RegionMap {
                            edge: name,
                            reason: format!("joins {a} and {b} vertices without a wall"),
                        })
                    }
                };
                hindex[vid(x, y)] = Some(edges.len());
                edges.push(Edge {
                    tail: vid(x, y),
                    head: vid(x2, y),
                    horizontal: true,
                    x,
                    y,
                    region,
                });
            }
        }
        for y in 0..vy {
            for x in 0..nx {
                let y2 = (y + 1) % ny;
                vindex[vid(x, y)] = Some(edges.len());
                edges.push(Edge {
                    tail: vid(x, y),
                    head: vid(x, y2),
                    horizontal: false,
                    x,
                    y,
                    region: columns[x],
                });
            }
        }
        if let Some(wi) = &wall {
            for e in &edges {
                if e.region == Region::Wall && e.horizontal {
                    return Err(QdError::RegionMap {
                        edge: format!("h({},{})", e.x, e.y),
                        reason: "horizontal wall edge".into(),
                    });
                }
            }
            let _ = wi;
        }

        let (px, py) = (w, h);
        let mut pedges = Vec::new();
        let mut pcorners = Vec::new();
        let mut pcoords = Vec::new();
        let mut plaq_region = Vec::new();
        for y in 0..py {
            for x in 0..px {
                let (x2, y2) = ((x + 1) % nx, (y + 1) % ny);
                let bottom = hindex[vid(x, y)].expect("bottom edge");
                let top = hindex[vid(x, y2)].expect("top edge");
                let left = vindex[vid(x, y)].expect("left edge");
                let right = vindex[vid(x2, y)].expect("right edge");
                pedges.push([bottom, right, top, left]);
                pcorners.push([vid(x, y), vid(x2, y), vid(x2, y2), vid(x, y2)]);
                pcoords.push((x, y));
                plaq_region.push(edges[bottom].region);
            }
        }
        let mut vedges = vec![[None; 4]; nx * ny];
        let mut vplaqs = vec![[None; 4]; nx * ny];
        for (i, e) in edges.iter().enumerate() {
            let (d_tail, d_head) = if e.horizontal { (0, 2) } else { (1, 3) };
            vedges[e.tail][d_tail] = Some(i);
            vedges[e.head][d_head] = Some(i);
        }
        for (p, c) in pcorners.iter().enumerate() {
            // The plaquette is above-right of its bottom-left corner, etc.
            vplaqs[c[0]][0] = Some(p);
            vplaqs[c[1]][1] = Some(p);
            vplaqs[c[2]][2] = Some(p);
            vplaqs[c[3]][3] = Some(p);
        }
        let vertex_region: Vec<Region> = (0..nx * ny).map(|v| columns[v % nx]).collect();

        let wall_members: Vec<Element> = wall
            .as_ref()
            .map(|w| w.subgroup.members.clone())
            .unwrap_or_default();
        let s3_values: Vec<Element> = (0..6).map(Element).collect();
        let allowed = edges
            .iter()
            .map(|e| match e.region {
                Region::Z2 => Z2_VALUES.to_vec(),
                Region::S3 => s3_values.clone(),
                Region::Wall => match spec.wall_rep {
                    WallRep::Merged => wall_members.clone(),
                    WallRep::Paired => (0..12).map(Element).collect(),
                },
            })
            .collect();
        let gauge = vertex_region
            .iter()
            .map(|r| match r {
                Region::Z2 => Z2_VALUES.to_vec(),
                Region::S3 => s3_values.clone(),
                Region::Wall => wall_members.clone(),
            })
            .collect();

        Ok(Self {
            spec: spec.clone(),
            nx,
            ny,
            torus,
            edges,
            vertex_region,
            plaq_region,
            vedges,
            vplaqs,
            pedges,
            pcorners,
            pcoords,
            allowed,
            gauge,
            hindex,
            vindex,
            wall,
        })
    }

    fn column_regions(spec: &LatticeSpec, nx: usize) -> Result<Vec<Region>> {
        if let Some(cols) = &spec.columns {
            if cols.len() != nx {
                return Err(QdError::Lattice(format!(
                    "{} column regions given for {} vertex columns",
                    cols.len(),
                    nx
                )));
            }
            if cols.iter().filter(|&&r| r == Region::Wall).count() > 1 {
                return Err(QdError::Lattice(
                    "at most one wall column is supported".into(),
                ));
            }
            return Ok(cols.clone());
        }
        Ok(match spec.layout {
            Layout::S3 => vec![Region::S3; nx],
            Layout::Z2 => vec![Region::Z2; nx],
            Layout::Hybrid => {
                let col = spec
                    .wall_column
                    .ok_or_else(|| QdError::Lattice("hybrid layout needs wall_column".into()))?;
                if col >= nx {
                    return Err(QdError::Lattice(format!(
                        "wall column {col} outside 0..{nx}"
                    )));
                }
                (0..nx)
                    .map(|x| match x.cmp(&col) {
                        std::cmp::Ordering::Less => Region::Z2,
                        std::cmp::Ordering::Equal => Region::Wall,
                        std::cmp::Ordering::Greater => Region::S3,
                    })
                    .collect()
            }
        })
    }

    pub fn is_torus(&self) -> bool {
        self.torus
    }

    pub fn num_vertices(&self) -> usize {
        self.vertex_region.len()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn num_plaquettes(&self) -> usize {
        self.pedges.len()
    }

    pub fn edge(&self, e: EdgeId) -> &Edge {
        &self.edges[e]
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edge_name(&self, e: EdgeId) -> String {
        let ed = &self.edges[e];
        format!(
            "{}({},{})",
            if ed.horizontal { 'h' } else { 'v' },
            ed.x,
            ed.y
        )
    }

    pub fn vertex(&self, x: usize, y: usize) -> VertexId {
        (y % self.ny) * self.nx + (x % self.nx)
    }

    pub fn vertex_coords(&self, v: VertexId) -> (usize, usize) {
        (v % self.nx, v / self.nx)
    }

    pub fn plaquette(&self, x: usize, y: usize) -> Option<PlaqId> {
        let (w, h) = (self.spec.width, self.spec.height);
        if self.torus {
            Some((y % h) * w + (x % w))
        } else if x < w && y < h {
            Some(y * w + x)
        } else {
            None
        }
    }

    pub fn plaquette_coords(&self, p: PlaqId) -> (usize, usize) {
        self.pcoords[p]
    }

    pub fn h_edge(&self, x: usize, y: usize) -> Option<EdgeId> {
        self.hindex[self.vertex(x, y)]
    }

    pub fn v_edge(&self, x: usize, y: usize) -> Option<EdgeId> {
        self.vindex[self.vertex(x, y)]
    }

    pub fn vertex_region(&self, v: VertexId) -> Region {
        self.vertex_region[v]
    }

    pub fn plaquette_region(&self, p: PlaqId) -> Region {
        self.plaq_region[p]
    }

    pub fn edge_region(&self, e: EdgeId) -> Region {
        self.edges[e].region
    }

    /// Values an edge may hold.
    pub fn allowed_values(&self, e: EdgeId) -> &[Element] {
        &self.allowed[e]
    }

    /// Gauge group acting at a vertex, as a subset of ℤ₂ × S₃.
    pub fn gauge_group(&self, v: VertexId) -> &[Element] {
        &self.gauge[v]
    }

    /// Projection of an ambient element onto the factor an edge (or plaquette) lives in.
    #[inline]
    pub fn project(&self, region: Region, g: Element) -> Element {
        match region {
            Region::Z2 => Element(ambient::z2_part(g) * 6),
            Region::S3 => ambient::s3_part(g),
            Region::Wall => g,
        }
    }

    /// Star of `v` in the order left, bottom, top, right, with a flag telling
    /// whether the edge points toward `v`.
    pub fn star(&self, v: VertexId) -> SmallVec<[(EdgeId, bool); 4]> {
        let mut out = SmallVec::new();
        for d in [2usize, 3, 1, 0] {
            if let Some(e) = self.vedges[v][d] {
                out.push((e, self.edges[e].head == v));
            }
        }
        out
    }

    pub fn edge_at(&self, v: VertexId, dir: usize) -> Option<EdgeId> {
        self.vedges[v][dir % 4]
    }

    pub fn plaquette_at(&self, v: VertexId, quadrant: usize) -> Option<PlaqId> {
        self.vplaqs[v][quadrant % 4]
    }

    pub fn neighbor(&self, v: VertexId, dir: usize) -> Option<VertexId> {
        let e = self.vedges[v][dir % 4]?;
        let ed = &self.edges[e];
        Some(if ed.tail == v { ed.head } else { ed.tail })
    }

    pub fn plaquette_edges(&self, p: PlaqId) -> [EdgeId; 4] {
        self.pedges[p]
    }

    /// Corners in the order bottom-left, bottom-right, top-right, top-left.
    pub fn plaquette_corners(&self, p: PlaqId) -> [VertexId; 4] {
        self.pcorners[p]
    }

    /// The canonical site of a plaquette uses its top-right corner.
    pub fn canonical_site(&self, p: PlaqId) -> Site {
        Site {
            p,
            v: self.pcorners[p][2],
        }
    }

    pub fn canonical_sites(&self) -> Vec<Site> {
        (0..self.num_plaquettes())
            .map(|p| self.canonical_site(p))
            .collect()
    }

    /// Boundary of `p` traversed counterclockwise from corner `v`. Each entry
    /// carries a flag telling whether the edge points counterclockwise, in
    /// which case it contributes its inverse to the flux.
    pub fn boundary(&self, site: Site) -> Result<[(EdgeId, bool); 4]> {
        let c = self.pcorners[site.p];
        let start = c.iter().position(|&x| x == site.v).ok_or_else(|| {
            QdError::Lattice(format!(
                "vertex {} is not a corner of plaquette {}",
                site.v, site.p
            ))
        })?;
        let [bottom, right, top, left] = self.pedges[site.p];
        // Counterclockwise from the bottom-left corner: bottom, right, top, left.
        let ring = [(bottom, true), (right, true), (top, false), (left, false)];
        let mut out = [(0, false); 4];
        for (k, slot) in out.iter_mut().enumerate() {
            *slot = ring[(start + k) % 4];
        }
        Ok(out)
    }

    pub fn quadrant_of(&self, v: VertexId, p: PlaqId) -> Option<usize> {
        (0..4).find(|&q| self.vplaqs[v][q] == Some(p))
    }

    pub fn direction_to(&self, a: VertexId, b: VertexId) -> Option<usize> {
        (0..4).find(|&d| self.neighbor(a, d) == Some(b))
    }

    /// Vertices adjacent to `v`, in the star order.
    pub fn neighbors(&self, v: VertexId) -> SmallVec<[VertexId; 4]> {
        (0..4).filter_map(|d| self.neighbor(v, d)).collect()
    }

    /// Builds the ribbon through an explicit list of sites, inferring each triangle.
    pub fn ribbon_from_sites(&self, sites: &[Site]) -> Result<Ribbon> {
        if sites.is_empty() {
            return Err(QdError::RibbonPath("empty site list".into()));
        }
        for s in sites {
            if s.p >= self.num_plaquettes() || !self.pcorners[s.p].contains(&s.v) {
                return Err(QdError::RibbonPath(format!("{s:?} is not a site")));
            }
        }
        let mut triangles = Vec::new();
        for w in sites.windows(2) {
            let (a, b) = (w[0], w[1]);
            let tri = if a.v == b.v && a.p != b.p {
                let shared = self.pedges[a.p]
                    .iter()
                    .copied()
                    .find(|e| {
                        self.pedges[b.p].contains(e)
                            && (self.edges[*e].tail == a.v || self.edges[*e].head == a.v)
                    })
                    .ok_or_else(|| {
                        QdError::RibbonPath(format!("{a:?} and {b:?} are not dual-adjacent"))
                    })?;
                Triangle {
                    kind: TriangleKind::Dual,
                    from: a,
                    to: b,
                    edge: shared,
                    aligned: self.edges[shared].head == a.v,
                }
            } else if a.p == b.p && a.v != b.v {
                let e = self.pedges[a.p]
                    .iter()
                    .copied()
                    .find(|&e| {
                        let ed = &self.edges[e];
                        (ed.tail == a.v && ed.head == b.v) || (ed.head == a.v && ed.tail == b.v)
                    })
                    .ok_or_else(|| {
                        QdError::RibbonPath(format!("{a:?} and {b:?} are not direct-adjacent"))
                    })?;
                Triangle {
                    kind: TriangleKind::Direct,
                    from: a,
                    to: b,
                    edge: e,
                    aligned: self.edges[e].tail == a.v,
                }
            } else {
                return Err(QdError::RibbonPath(format!(
                    "consecutive sites {a:?} and {b:?} do not share a triangle"
                )));
            };
            triangles.push(tri);
        }
        let r = Ribbon {
            triangles,
            start: sites[0],
            end: *sites.last().unwrap(),
        };
        r.check_distinct()?;
        Ok(r)
    }

    /// Sites swept by a ribbon that follows the vertex path `path` with its
    /// dual side on the right, starting at plaquette `start_p` around the first
    /// vertex and ending at `end_p` around the last. With a one-vertex path and
    /// `start_p == end_p`, the ribbon makes a full turn.
    pub fn sites_along(
        &self,
        start_p: PlaqId,
        path: &[VertexId],
        end_p: PlaqId,
    ) -> Result<Vec<Site>> {
        let v0 = *path
            .first()
            .ok_or_else(|| QdError::RibbonPath("empty vertex path".into()))?;
        let mut q = self.quadrant_of(v0, start_p).ok_or_else(|| {
            QdError::RibbonPath(format!("plaquette {start_p} does not touch vertex {v0}"))
        })?;
        let mut sites = vec![Site { p: start_p, v: v0 }];
        let rotate = |sites: &mut Vec<Site>,
                      v: VertexId,
                      q: &mut usize,
                      target: usize,
                      full: bool|
         -> Result<()> {
            let mut first = full;
            while *q != target || first {
                first = false;
                *q = (*q + 1) % 4;
                let p = self.vplaqs[v][*q].ok_or_else(|| {
                    QdError::RibbonPath(format!("ribbon leaves the lattice around vertex {v}"))
                })?;
                sites.push(Site { p, v });
            }
            Ok(())
        };
        if path.len() == 1 {
            let target = self.quadrant_of(v0, end_p).ok_or_else(|| {
                QdError::RibbonPath(format!("plaquette {end_p} does not touch vertex {v0}"))
            })?;
            let full = target == q;
            rotate(&mut sites, v0, &mut q, target, full)?;
            return Ok(sites);
        }
        for w in path.windows(2) {
            let (a, b) = (w[0], w[1]);
            let d = self.direction_to(a, b).ok_or_else(|| {
                QdError::RibbonPath(format!("vertices {a} and {b} are not adjacent"))
            })?;
            rotate(&mut sites, a, &mut q, (d + 3) % 4, false)?;
            let p = sites.last().unwrap().p;
            sites.push(Site { p, v: b });
            q = (d + 2) % 4;
        }
        let vn = *path.last().unwrap();
        let target = self.quadrant_of(vn, end_p).ok_or_else(|| {
            QdError::RibbonPath(format!("plaquette {end_p} does not touch vertex {vn}"))
        })?;
        rotate(&mut sites, vn, &mut q, target, false)?;
        Ok(sites)
    }

    pub fn ribbon_along(
        &self,
        start_p: PlaqId,
        path: &[VertexId],
        end_p: PlaqId,
    ) -> Result<Ribbon> {
        let sites = self.sites_along(start_p, path, end_p)?;
        self.ribbon_from_sites(&sites)
    }

    /// Open ribbon between the canonical sites of two plaquettes following `path`,
    /// which must run from the top-right corner of `from` to that of `to`.
    pub fn ribbon_between(&self, from: PlaqId, path: &[VertexId], to: PlaqId) -> Result<Ribbon> {
        let (a, b) = (self.canonical_site(from), self.canonical_site(to));
        if path.first() != Some(&a.v) || path.last() != Some(&b.v) {
            return Err(QdError::RibbonPath(
                "path must start and end at the canonical vertices".into(),
            ));
        }
        self.ribbon_along(from, path, to)
    }

    /// Monotone lattice path between two vertices, horizontal leg first
    /// unless `vertical_first`.
    pub fn manhattan_path(
        &self,
        a: VertexId,
        b: VertexId,
        vertical_first: bool,
    ) -> Result<Vec<VertexId>> {
        let (ax, ay) = self.vertex_coords(a);
        let (bx, by) = self.vertex_coords(b);
        let mut path = vec![a];
        let mut cur = a;
        let step =
            |cur: &mut VertexId, path: &mut Vec<VertexId>, dir: usize, n: usize| -> Result<()> {
                for _ in 0..n {
                    *cur = self
                        .neighbor(*cur, dir)
                        .ok_or_else(|| QdError::RibbonPath("path leaves the lattice".into()))?;
                    path.push(*cur);
                }
                Ok(())
            };
        // On a torus take the shorter way round.
        let leg = |a: usize, b: usize, n: usize, fwd: usize, back: usize| {
            if self.torus {
                let f = (b + n - a) % n;
                if f <= n - f {
                    (fwd, f)
                } else {
                    (back, n - f)
                }
            } else if b >= a {
                (fwd, b - a)
            } else {
                (back, a - b)
            }
        };
        let (hdir, hn) = leg(ax, bx, self.nx, 0, 2);
        let (vdir, vn) = leg(ay, by, self.ny, 1, 3);
        if vertical_first {
            step(&mut cur, &mut path, vdir, vn)?;
            step(&mut cur, &mut path, hdir, hn)?;
        } else {
            step(&mut cur, &mut path, hdir, hn)?;
            step(&mut cur, &mut path, vdir, vn)?;
        }
        Ok(path)
    }

    /// Concatenates straight legs through the given corner vertices.
    pub fn polyline(&self, corners: &[VertexId]) -> Result<Vec<VertexId>> {
        let mut path = vec![corners[0]];
        for w in corners.windows(2) {
            let (ax, ay) = self.vertex_coords(w[0]);
            let (bx, by) = self.vertex_coords(w[1]);
            if ax != bx && ay != by {
                return Err(QdError::RibbonPath(
                    "polyline legs must be axis aligned".into(),
                ));
            }
            let leg = self.manhattan_path(w[0], w[1], false)?;
            path.extend_from_slice(&leg[1..]);
        }
        Ok(path)
    }

    /// Closed ribbon whose direct path runs counterclockwise around the vertex
    /// rectangle and whose dual path sweeps the plaquettes just outside it.
    /// It starts and ends at the site formed by the bottom-left corner and the
    /// plaquette above-left of it.
    pub fn closed_ribbon(&self, rect: Rect) -> Result<Ribbon> {
        let bl = self.vertex(rect.x0, rect.y0);
        if rect.x1 < rect.x0 || rect.y1 < rect.y0 {
            return Err(QdError::RibbonGeometry("degenerate rectangle".into()));
        }
        if !self.torus && (rect.x1 >= self.nx || rect.y1 >= self.ny) {
            return Err(QdError::RibbonGeometry(
                "rectangle outside the lattice".into(),
            ));
        }
        let (tr_x, tr_y) = (rect.x1, rect.y1);
        let corners = if rect.x0 == rect.x1 && rect.y0 == rect.y1 {
            vec![bl]
        } else {
            let br = self.vertex(tr_x, rect.y0);
            let tr = self.vertex(tr_x, tr_y);
            let tl = self.vertex(rect.x0, tr_y);
            let mut c = vec![bl];
            for v in [br, tr, tl, bl] {
                if *c.last().unwrap() != v {
                    c.push(v);
                }
            }
            c
        };
        let path = if corners.len() == 1 {
            corners
        } else {
            self.polyline(&corners)?
        };
        let start_p = self.vplaqs[bl][1].ok_or_else(|| {
            QdError::RibbonGeometry(
                "closed ribbon needs a plaquette above-left of its corner".into(),
            )
        })?;
        let r = self.ribbon_along(start_p, &path, start_p)?;
        if !r.is_closed() {
            return Err(QdError::RibbonGeometry(
                "rectangle loop did not close".into(),
            ));
        }
        Ok(r)
    }

    pub fn rect_vertices(&self, rect: Rect) -> Vec<VertexId> {
        let mut out = Vec::new();
        for y in rect.y0..=rect.y1 {
            for x in rect.x0..=rect.x1 {
                out.push(self.vertex(x, y));
            }
        }
        out
    }

    /// Plaquettes strictly inside a vertex rectangle.
    pub fn rect_plaquettes(&self, rect: Rect) -> Vec<PlaqId> {
        let mut out = Vec::new();
        for y in rect.y0..rect.y1 {
            for x in rect.x0..rect.x1 {
                if let Some(p) = self.plaquette(x, y) {
                    out.push(p);
                }
            }
        }
        out
    }

    /// Edges with both endpoints in the vertex set.
    pub fn interior_edges(&self, vertices: &BTreeSet<VertexId>) -> Vec<EdgeId> {
        (0..self.edges.len())
            .filter(|&e| {
                vertices.contains(&self.edges[e].tail) && vertices.contains(&self.edges[e].head)
            })
            .collect()
    }

    /// Edges from `set` to vertices outside it.
    pub fn boundary_edges(&self, vertices: &BTreeSet<VertexId>) -> Vec<EdgeId> {
        (0..self.edges.len())
            .filter(|&e| {
                vertices.contains(&self.edges[e].tail) != vertices.contains(&self.edges[e].head)
            })
            .collect()
    }

    /// Breadth-first vertex path avoiding the given vertices.
    pub fn vertex_route(
        &self,
        a: VertexId,
        b: VertexId,
        avoid: &BTreeSet<VertexId>,
    ) -> Result<Vec<VertexId>> {
        let mut prev = vec![usize::MAX; self.num_vertices()];
        let mut queue = VecDeque::from([a]);
        prev[a] = a;
        while let Some(v) = queue.pop_front() {
            if v == b {
                break;
            }
            for d in 0..4 {
                if let Some(w) = self.neighbor(v, d) {
                    if prev[w] == usize::MAX && (!avoid.contains(&w) || w == b) {
                        prev[w] = v;
                        queue.push_back(w);
                    }
                }
            }
        }
        if prev[b] == usize::MAX {
            return Err(QdError::Routing(format!("no route from vertex {a} to {b}")));
        }
        let mut path = vec![b];
        while *path.last().unwrap() != a {
            path.push(prev[*path.last().unwrap()]);
        }
        path.reverse();
        Ok(path)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn torus_counts() {
        let l = LatticeSpec::torus(3, 2).build().unwrap();
        assert_eq!(l.num_vertices(), 6);
        assert_eq!(l.num_edges(), 12);
        assert_eq!(l.num_plaquettes(), 6);
        for v in 0..l.num_vertices() {
            assert_eq!(l.star(v).len(), 4);
        }
    }

    #[test]
    fn open_patch_counts() {
        let l = LatticeSpec::open(6, 4).build().unwrap();
        assert_eq!(l.num_vertices(), 35);
        assert_eq!(l.num_edges(), 58);
        assert_eq!(l.num_plaquettes(), 24);
        assert_eq!(l.star(l.vertex(0, 0)).len(), 2);
    }

    #[test]
    fn tiny_torus_rejected() {
        assert!(matches!(
            LatticeSpec::torus(1, 3).build(),
            Err(QdError::Lattice(_))
        ));
    }

    #[test]
    fn star_orientation_flags() {
        let l = LatticeSpec::torus(3, 3).build().unwrap();
        let v = l.vertex(1, 1);
        let s = l.star(v);
        assert_eq!(s[0], (l.h_edge(0, 1).unwrap(), true));
        assert_eq!(s[1], (l.v_edge(1, 0).unwrap(), true));
        assert_eq!(s[2], (l.v_edge(1, 1).unwrap(), false));
        assert_eq!(s[3], (l.h_edge(1, 1).unwrap(), false));
    }

    #[test]
    fn boundary_from_top_right() {
        let l = LatticeSpec::torus(3, 3).build().unwrap();
        let p = l.plaquette(0, 0).unwrap();
        let b = l.boundary(l.canonical_site(p)).unwrap();
        assert_eq!(b[0], (l.h_edge(0, 1).unwrap(), false));
        assert_eq!(b[1], (l.v_edge(0, 0).unwrap(), false));
        assert_eq!(b[2], (l.h_edge(0, 0).unwrap(), true));
        assert_eq!(b[3], (l.v_edge(1, 0).unwrap(), true));
    }

    #[test]
    fn hybrid_regions() {
        let l = LatticeSpec::open(4, 2).hybrid(2, 9).build().unwrap();
        assert_eq!(l.vertex_region(l.vertex(0, 0)), Region::Z2);
        assert_eq!(l.vertex_region(l.vertex(2, 1)), Region::Wall);
        assert_eq!(l.edge_region(l.h_edge(1, 0).unwrap()), Region::Z2);
        assert_eq!(l.edge_region(l.h_edge(2, 0).unwrap()), Region::S3);
        assert_eq!(l.edge_region(l.v_edge(2, 0).unwrap()), Region::Wall);
        assert_eq!(l.allowed_values(l.v_edge(2, 0).unwrap()).len(), 6);
        assert_eq!(l.plaquette_region(l.plaquette(1, 0).unwrap()), Region::Z2);
        assert_eq!(l.plaquette_region(l.plaquette(2, 0).unwrap()), Region::S3);
    }

    #[test]
    fn bad_region_map_names_edge() {
        let mut spec = LatticeSpec::open(2, 1);
        spec.columns = Some(vec![Region::Z2, Region::S3, Region::S3]);
        match spec.build() {
            Err(QdError::RegionMap { edge, .. }) => assert_eq!(edge, "h(0,0)"),
            other => panic!("unexpected {other:?}"),
        }
        // A wall on a torus leaves a seam without a wall.
        assert!(matches!(
            LatticeSpec::torus(4, 2).hybrid(1, 9).build(),
            Err(QdError::RegionMap { .. })
        ));
    }

    #[test]
    fn two_triangle_ribbon() {
        let l = LatticeSpec::torus(3, 3).build().unwrap();
        let p0 = l.plaquette(0, 0).unwrap();
        let p1 = l.plaquette(1, 0).unwrap();
        let r = l
            .ribbon_between(p0, &[l.vertex(1, 1), l.vertex(2, 1)], p1)
            .unwrap();
        assert_eq!(r.len(), 2);
        assert_eq!(r.triangles[0].kind, TriangleKind::Dual);
        assert_eq!(r.triangles[0].edge, l.v_edge(1, 0).unwrap());
        assert!(r.triangles[0].aligned);
        assert_eq!(r.triangles[1].kind, TriangleKind::Direct);
        assert_eq!(r.triangles[1].edge, l.h_edge(1, 1).unwrap());
        assert!(r.triangles[1].aligned);
        assert_eq!(r.end, l.canonical_site(p1));
    }

    #[test]
    fn closed_ribbons_close() {
        let l = LatticeSpec::open(5, 5).build().unwrap();
        let single = l.closed_ribbon(Rect::point(2, 2)).unwrap();
        assert!(single.is_closed());
        assert_eq!(single.len(), 4);
        assert!(single
            .triangles
            .iter()
            .all(|t| t.kind == TriangleKind::Dual));
        let r = l.closed_ribbon(Rect::new(1, 1, 3, 2)).unwrap();
        assert!(r.is_closed());
        let direct = r
            .triangles
            .iter()
            .filter(|t| t.kind == TriangleKind::Direct)
            .count();
        assert_eq!(direct, 6);
        let dual = r
            .triangles
            .iter()
            .filter(|t| t.kind == TriangleKind::Dual)
            .count();
        assert_eq!(dual, 10);
    }

    #[test]
    fn bad_sites_rejected() {
        let l = LatticeSpec::torus(3, 3).build().unwrap();
        let a = l.canonical_site(0);
        let far = l.canonical_site(l.plaquette(2, 2).unwrap());
        assert!(matches!(
            l.ribbon_from_sites(&[a, far]),
            Err(QdError::RibbonPath(_))
        ));
    }

    #[test]
    fn spec_round_trips_through_toml_shape() {
        let spec = LatticeSpec::open(4, 3).hybrid(2, 9);
        let json = serde_json::to_string(&spec).unwrap();
        let back: LatticeSpec = serde_json::from_str(&json).unwrap();
        assert_eq!(spec, back);
    }

    #[test]
    fn oversized_lattices_are_a_resource_error() {
        assert!(matches!(
            LatticeSpec::torus(9, 9).build(),
            Err(QdError::Resource(_))
        ));
        assert!(LatticeSpec::torus(8, 8).build().is_ok());
    }
}
