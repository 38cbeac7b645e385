use std::f64::consts::PI;

use super::{dot, edge_incidence_of, face_normal, norm, Mesh};
use crate::error::{Error, Result};

/// Angles between the normals of face pairs sharing an edge, divided by π.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeAngleSet {
    pub angles: Vec<f64>,
}

impl EdgeAngleSet {
    pub fn len(&self) -> usize {
        self.angles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.angles.is_empty()
    }

    pub fn mean(&self) -> f64 {
        self.angles.iter().sum::<f64>() / self.angles.len() as f64
    }

    /// Population standard deviation.
    pub fn std(&self) -> f64 {
        let mean = self.mean();
        let var = self
            .angles
            .iter()
            .map(|a| (a - mean) * (a - mean))
            .sum::<f64>()
            / self.angles.len() as f64;
        var.sqrt()
    }
}

/// Scaled dihedral angle of every edge shared by exactly two non-degenerate
/// faces. Zero-area faces are dropped before edges are paired.
pub fn scaled_dihedral_angles(mesh: &Mesh) -> Result<EdgeAngleSet> {
    let normals: Vec<Option<[f64; 3]>> = mesh
        .faces
        .iter()
        .map(|f| face_normal(mesh.face_positions(f)))
        .collect();

    let live = mesh
        .faces
        .iter()
        .enumerate()
        .filter(|(i, _)| normals[*i].is_some())
        .map(|(i, f)| (i as u32, f.v));

    let angles: Vec<f64> = edge_incidence_of(live)
        .into_iter()
        .filter(|e| e.faces.len() == 2)
        .map(|e| {
            let n1 = normals[e.faces[0] as usize].unwrap();
            let n2 = normals[e.faces[1] as usize].unwrap();
            let cos = (dot(n1, n2) / (norm(n1) * norm(n2))).clamp(-1.0, 1.0);
            cos.acos() / PI
        })
        .collect();

    if angles.is_empty() {
        return Err(Error::NoInteriorEdges);
    }
    Ok(EdgeAngleSet { angles })
}

/// Population standard deviation of the scaled dihedral angles.
pub fn geometry_information(mesh: &Mesh) -> Result<f64> {
    Ok(scaled_dihedral_angles(mesh)?.std())
}

pub fn mean_scaled_dihedral(mesh: &Mesh) -> Result<f64> {
    Ok(scaled_dihedral_angles(mesh)?.mean())
}

#[cfg(test)]
mod tests {
    use super::super::fixtures::*;
    use super::super::Face;
    use super::*;

    #[test]
    fn tetrahedron_angles_are_analytic() {
        let set = scaled_dihedral_angles(&tetrahedron()).unwrap();
        let expected = (-1.0f64 / 3.0).acos() / PI;
        assert_eq!(set.len(), 6);
        for a in &set.angles {
            assert!((a - expected).abs() < 1e-12, "{a}");
        }
        assert!((expected - 0.6082).abs() < 1e-4);
        assert!(geometry_information(&tetrahedron()).unwrap() < 1e-12);
    }

    #[test]
    fn coplanar_pair_is_zero() {
        let set = scaled_dihedral_angles(&flat_square()).unwrap();
        assert_eq!(set.angles, vec![0.0]);
    }

    #[test]
    fn cube_counts() {
        let set = scaled_dihedral_angles(&unit_cube()).unwrap();
        assert_eq!(set.len(), 18);
        let halves = set.angles.iter().filter(|a| (*a - 0.5).abs() < 1e-12).count();
        let zeros = set.angles.iter().filter(|a| a.abs() < 1e-12).count();
        assert_eq!((halves, zeros), (12, 6));
        assert!((set.std() - (1.0f64 / 18.0).sqrt()).abs() < 1e-12);
        assert!((set.mean() - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn single_triangle_has_no_interior_edges() {
        let m = Mesh::new(
            vec![[0.0; 3], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]],
            vec![],
            vec![Face::new([0, 1, 2], None)],
            None,
        )
        .unwrap();
        assert!(matches!(scaled_dihedral_angles(&m), Err(Error::NoInteriorEdges)));
    }

    #[test]
    fn degenerate_face_is_excluded() {
        let mut m = flat_square();
        // a sliver with a repeated vertex shares edge (0,1) with a real face
        m.faces.push(Face::new([0, 1, 1], None));
        m.faces.push(Face::new([1, 0, 0], None));
        let set = scaled_dihedral_angles(&m).unwrap();
        assert_eq!(set.len(), 1);
    }
}
