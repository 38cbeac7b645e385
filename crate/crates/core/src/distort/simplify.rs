//! Quadric-error edge-collapse simplification.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashMap};

use crate::error::{Error, Result};
use crate::mesh::{cross, dot, face_normal, norm, sub, Face, Mesh};

/// Symmetric 4×4 quadric stored as its upper triangle.
#[derive(Debug, Clone, Copy, Default)]
struct Quadric([f64; 10]);

impl Quadric {
    fn from_plane(n: [f64; 3], d: f64, weight: f64) -> Self {
        let [a, b, c] = n;
        Quadric(
            [
                a * a, a * b, a * c, a * d,
                b * b, b * c, b * d,
                c * c, c * d,
                d * d,
            ]
            .map(|x| x * weight),
        )
    }

    fn add(&mut self, o: &Quadric) {
        for (x, y) in self.0.iter_mut().zip(o.0) {
            *x += y;
        }
    }

    fn plus(mut self, o: &Quadric) -> Quadric {
        self.add(o);
        self
    }

    fn error(&self, p: [f64; 3]) -> f64 {
        let q = &self.0;
        let [x, y, z] = p;
        let e = q[0] * x * x + 2.0 * q[1] * x * y + 2.0 * q[2] * x * z + 2.0 * q[3] * x
            + q[4] * y * y + 2.0 * q[5] * y * z + 2.0 * q[6] * y
            + q[7] * z * z + 2.0 * q[8] * z
            + q[9];
        e.max(0.0)
    }
}

/// Heap entry: collapse `remove` into `keep`.
#[derive(Debug, Clone, Copy)]
struct Candidate {
    cost: f64,
    remove: u32,
    keep: u32,
    stamp_remove: u32,
    stamp_keep: u32,
}

impl PartialEq for Candidate {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Candidate {}
impl PartialOrd for Candidate {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Candidate {
    // reversed so BinaryHeap pops the cheapest; ties broken by indices
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .cost
            .total_cmp(&self.cost)
            .then_with(|| other.remove.cmp(&self.remove))
            .then_with(|| other.keep.cmp(&self.keep))
    }
}

/// Weight of the perpendicular planes that pin boundary edges.
const BOUNDARY_WEIGHT: f64 = 1000.0;

struct State<'a> {
    pos: &'a [[f64; 3]],
    faces: Vec<[u32; 3]>,
    face_uv: Vec<Option<[u32; 3]>>,
    face_alive: Vec<bool>,
    vert_faces: Vec<Vec<u32>>,
    vert_alive: Vec<bool>,
    stamp: Vec<u32>,
    quadric: Vec<Quadric>,
    live_faces: usize,
}

impl State<'_> {
    fn faces_of(&self, v: u32) -> impl Iterator<Item = u32> + '_ {
        self.vert_faces[v as usize]
            .iter()
            .copied()
            .filter(|&f| self.face_alive[f as usize])
    }

    fn neighbours(&self, v: u32) -> Vec<u32> {
        let mut n: Vec<u32> = self
            .faces_of(v)
            .flat_map(|f| self.faces[f as usize])
            .filter(|&u| u != v)
            .collect();
        n.sort_unstable();
        n.dedup();
        n
    }

    fn edge_faces(&self, a: u32, b: u32) -> Vec<u32> {
        self.faces_of(a)
            .filter(|&f| self.faces[f as usize].contains(&b))
            .collect()
    }

    fn is_boundary_vertex(&self, v: u32) -> bool {
        self.neighbours(v)
            .into_iter()
            .any(|u| self.edge_faces(v, u).len() == 1)
    }

    fn candidate(&self, a: u32, b: u32) -> Candidate {
        let q = self.quadric[a as usize].plus(&self.quadric[b as usize]);
        let ca = q.error(self.pos[a as usize]);
        let cb = q.error(self.pos[b as usize]);
        let (remove, keep, cost) = if cb <= ca { (a, b, cb) } else { (b, a, ca) };
        Candidate {
            cost,
            remove,
            keep,
            stamp_remove: self.stamp[remove as usize],
            stamp_keep: self.stamp[keep as usize],
        }
    }

    fn push_edges_of(&self, v: u32, heap: &mut BinaryHeap<Candidate>) {
        for u in self.neighbours(v) {
            heap.push(self.candidate(v, u));
        }
    }

    /// Collapses `r` into `k` if the result stays manifold, unflipped and
    /// UV-consistent. Returns whether the collapse happened.
    fn try_collapse(&mut self, r: u32, k: u32) -> bool {
        let shared = self.edge_faces(r, k);
        if shared.is_empty() || shared.len() > 2 {
            return false;
        }
        // link condition
        let nr = self.neighbours(r);
        let nk = self.neighbours(k);
        let common = nr.iter().filter(|u| nk.binary_search(u).is_ok()).count();
        if common != shared.len() {
            return false;
        }
        if shared.len() == 2 && self.is_boundary_vertex(r) && self.is_boundary_vertex(k) {
            return false;
        }
        if self.live_faces <= 4 {
            return false;
        }

        let moving: Vec<u32> = self.faces_of(r).filter(|f| !shared.contains(f)).collect();
        let pk = self.pos[k as usize];
        for &f in &moving {
            let tri = self.faces[f as usize];
            let before = tri.map(|v| self.pos[v as usize]);
            let after = tri.map(|v| if v == r { pk } else { self.pos[v as usize] });
            let (Some(n0), Some(n1)) = (face_normal(before), face_normal(after)) else {
                return false;
            };
            if dot(n0, n1) <= 0.0 {
                return false;
            }
        }

        // uv of r in each removed face maps to the uv of k in that face
        let mut uv_map: HashMap<u32, u32> = HashMap::new();
        for &f in &shared {
            if let Some(uv) = self.face_uv[f as usize] {
                let tri = self.faces[f as usize];
                let ir = tri.iter().position(|&v| v == r).unwrap();
                let ik = tri.iter().position(|&v| v == k).unwrap();
                uv_map.entry(uv[ir]).or_insert(uv[ik]);
            }
        }
        let covered = moving.iter().all(|&f| match self.face_uv[f as usize] {
            Some(uv) => {
                let ir = self.faces[f as usize].iter().position(|&v| v == r).unwrap();
                uv_map.contains_key(&uv[ir])
            }
            None => true,
        });
        if !covered {
            return false;
        }

        for &f in &shared {
            self.face_alive[f as usize] = false;
            self.live_faces -= 1;
        }
        for &f in &moving {
            let tri = &mut self.faces[f as usize];
            let ir = tri.iter().position(|&v| v == r).unwrap();
            tri[ir] = k;
            if let Some(uv) = &mut self.face_uv[f as usize] {
                uv[ir] = uv_map[&uv[ir]];
            }
            self.vert_faces[k as usize].push(f);
        }
        self.vert_faces[k as usize].retain(|&f| self.face_alive[f as usize]);
        self.vert_faces[r as usize].clear();
        self.vert_alive[r as usize] = false;
        let qr = self.quadric[r as usize];
        self.quadric[k as usize].add(&qr);
        self.stamp[k as usize] += 1;
        self.stamp[r as usize] += 1;
        true
    }
}

/// Collapses edges in order of quadric error until at most
/// `ceil(ratio · F₀)` faces remain. Each edge collapses onto whichever
/// endpoint has the lower error, so surviving vertices keep their original
/// positions and UVs. Collapses that would break manifoldness, flip a face
/// or tear a UV seam are skipped; if no admissible collapse remains the
/// mesh is returned above target.
pub fn simplify_mesh(mesh: &Mesh, ratio: f64) -> Result<Mesh> {
    if !(ratio > 0.0 && ratio <= 1.0) {
        return Err(Error::InvalidArgument(format!("simplification ratio {ratio} outside (0, 1]")));
    }
    let f0 = mesh.faces.len();
    let target = (ratio * f0 as f64).ceil() as usize;
    if target >= f0 {
        return Ok(mesh.clone());
    }
    let nv = mesh.vertices.len();
    let mut st = State {
        pos: &mesh.vertices,
        faces: mesh.faces.iter().map(|f| f.v).collect(),
        face_uv: mesh.faces.iter().map(|f| f.uv).collect(),
        face_alive: vec![true; f0],
        vert_faces: vec![Vec::new(); nv],
        vert_alive: vec![true; nv],
        stamp: vec![0; nv],
        quadric: vec![Quadric::default(); nv],
        live_faces: f0,
    };
    for (i, tri) in st.faces.iter().enumerate() {
        if tri[0] == tri[1] || tri[1] == tri[2] || tri[0] == tri[2] {
            st.face_alive[i] = false;
            st.live_faces -= 1;
            continue;
        }
        for &v in tri {
            st.vert_faces[v as usize].push(i as u32);
        }
    }
    for (i, tri) in st.faces.iter().enumerate() {
        if !st.face_alive[i] {
            continue;
        }
        let p = tri.map(|v| mesh.vertices[v as usize]);
        let Some(n) = face_normal(p) else { continue };
        let len = norm(n);
        let n = n.map(|c| c / len);
        let q = Quadric::from_plane(n, -dot(n, p[0]), 1.0);
        for &v in tri {
            st.quadric[v as usize].add(&q);
        }
    }
    // pin open boundaries with perpendicular planes
    for edge in mesh.edge_incidence() {
        if edge.faces.len() != 1 {
            continue;
        }
        let f = edge.faces[0] as usize;
        let p = st.faces[f].map(|v| mesh.vertices[v as usize]);
        let Some(n) = face_normal(p) else { continue };
        let (pa, pb) = (mesh.vertices[edge.a as usize], mesh.vertices[edge.b as usize]);
        let e = sub(pb, pa);
        let m = cross(e, n);
        let len = norm(m);
        if len == 0.0 {
            continue;
        }
        let m = m.map(|c| c / len);
        let q = Quadric::from_plane(m, -dot(m, pa), BOUNDARY_WEIGHT);
        st.quadric[edge.a as usize].add(&q);
        st.quadric[edge.b as usize].add(&q);
    }

    let mut heap = BinaryHeap::new();
    for edge in mesh.edge_incidence() {
        heap.push(st.candidate(edge.a, edge.b));
    }
    while st.live_faces > target {
        let Some(c) = heap.pop() else { break };
        let (r, k) = (c.remove, c.keep);
        if !st.vert_alive[r as usize]
            || !st.vert_alive[k as usize]
            || st.stamp[r as usize] != c.stamp_remove
            || st.stamp[k as usize] != c.stamp_keep
        {
            continue;
        }
        if st.try_collapse(r, k) {
            st.push_edges_of(k, &mut heap);
        }
    }
    Ok(compact(mesh, &st))
}

/// Drops dead faces and unreferenced vertices/UVs, preserving order.
fn compact(mesh: &Mesh, st: &State) -> Mesh {
    let mut vmap = vec![u32::MAX; mesh.vertices.len()];
    let mut tmap = vec![u32::MAX; mesh.uvs.len()];
    let mut vertices = Vec::new();
    let mut uvs = Vec::new();
    let mut faces = Vec::with_capacity(st.live_faces);
    for (i, tri) in st.faces.iter().enumerate() {
        if !st.face_alive[i] {
            continue;
        }
        let v = tri.map(|v| {
            if vmap[v as usize] == u32::MAX {
                vmap[v as usize] = vertices.len() as u32;
                vertices.push(mesh.vertices[v as usize]);
            }
            vmap[v as usize]
        });
        let uv = st.face_uv[i].map(|t| {
            t.map(|t| {
                if tmap[t as usize] == u32::MAX {
                    tmap[t as usize] = uvs.len() as u32;
                    uvs.push(mesh.uvs[t as usize]);
                }
                tmap[t as usize]
            })
        });
        faces.push(Face::new(v, uv));
    }
    Mesh {
        vertices,
        uvs,
        faces,
        texture: mesh.texture.clone(),
    }
}
