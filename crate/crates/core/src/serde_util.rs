//! Serde adapters for the on-disk conventions: points as 3-arrays, rotations
//! as row-major 9-arrays, transforms as row-major 4×4 (16-array) matrices.

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::{Mat3, Vec3};

pub mod vec3 {
    use super::*;

    pub fn serialize<S: Serializer>(v: &Vec3, s: S) -> Result<S::Ok, S::Error> {
        [v.x, v.y, v.z].serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec3, D::Error> {
        let a = <[f64; 3]>::deserialize(d)?;
        Ok(Vec3::new(a[0], a[1], a[2]))
    }
}

pub mod opt_vec3 {
    use super::*;

    pub fn serialize<S: Serializer>(v: &Option<Vec3>, s: S) -> Result<S::Ok, S::Error> {
        v.map(|v| [v.x, v.y, v.z]).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<Vec3>, D::Error> {
        let a = Option::<[f64; 3]>::deserialize(d)?;
        Ok(a.map(|a| Vec3::new(a[0], a[1], a[2])))
    }
}

pub mod vec3_list {
    use super::*;

    pub fn serialize<S: Serializer>(v: &[Vec3], s: S) -> Result<S::Ok, S::Error> {
        let rows: Vec<[f64; 3]> = v.iter().map(|p| [p.x, p.y, p.z]).collect();
        rows.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Vec3>, D::Error> {
        let rows = Vec::<[f64; 3]>::deserialize(d)?;
        Ok(rows.into_iter().map(|a| Vec3::new(a[0], a[1], a[2])).collect())
    }
}

pub mod rot9 {
    use super::*;

    pub fn to_row_major(m: &Mat3) -> [f64; 9] {
        let mut out = [0.0; 9];
        for r in 0..3 {
            for c in 0..3 {
                out[3 * r + c] = m[(r, c)];
            }
        }
        out
    }

    pub fn from_row_major(a: &[f64; 9]) -> Mat3 {
        Mat3::from_row_slice(a)
    }

    pub fn serialize<S: Serializer>(m: &Mat3, s: S) -> Result<S::Ok, S::Error> {
        to_row_major(m).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Mat3, D::Error> {
        let a = <[f64; 9]>::deserialize(d)?;
        Ok(from_row_major(&a))
    }
}
