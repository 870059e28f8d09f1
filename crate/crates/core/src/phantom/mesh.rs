use serde::{Deserialize, Serialize};

use crate::error::{input, Result};
use crate::geom::Vec3;
use crate::grid::Structure;

/// Vertex counts of the ST, SV and MD surfaces.
pub const CLASS_COUNTS: [usize; 3] = [3344, 3132, 2852];
pub const TOTAL_VERTICES: usize = 3344 + 3132 + 2852;

/// Triangle mesh of the three structures whose vertex order is the
/// correspondence: vertex `i` denotes the same anatomical point in every mesh.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorrespondenceMesh {
    pub vertices: Vec<Vec3>,
    pub faces: Vec<[usize; 3]>,
    /// Consecutive vertex counts per structure, in ST, SV, MD order.
    pub class_counts: [usize; 3],
}

impl CorrespondenceMesh {
    pub fn new(vertices: Vec<Vec3>, faces: Vec<[usize; 3]>, class_counts: [usize; 3]) -> Result<Self> {
        let m = Self {
            vertices,
            faces,
            class_counts,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        let n: usize = self.class_counts.iter().sum();
        if n != self.vertices.len() {
            return input(format!(
                "class counts sum to {n} but mesh has {} vertices",
                self.vertices.len()
            ));
        }
        if let Some(f) = self.faces.iter().find(|f| f.iter().any(|&i| i >= n)) {
            return input(format!("face {f:?} references a missing vertex"));
        }
        if self.vertices.iter().any(|v| !crate::geom::is_finite(*v)) {
            return input("mesh has non-finite vertices");
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn range(&self, s: Structure) -> std::ops::Range<usize> {
        let c = self.class_counts;
        match s {
            Structure::St => 0..c[0],
            Structure::Sv => c[0]..c[0] + c[1],
            Structure::Md => c[0] + c[1]..c[0] + c[1] + c[2],
        }
    }

    /// Same faces and class ranges with new vertex positions.
    pub fn with_vertices(&self, vertices: Vec<Vec3>) -> Result<Self> {
        if vertices.len() != self.vertices.len() {
            return input("replacement vertex count differs");
        }
        Ok(Self {
            vertices,
            faces: self.faces.clone(),
            class_counts: self.class_counts,
        })
    }

    /// Whether `other` has the same vertex count, class ranges and faces.
    pub fn same_topology(&self, other: &Self) -> bool {
        self.vertices.len() == other.vertices.len()
            && self.class_counts == other.class_counts
            && self.faces == other.faces
    }
}
