//! Named systems used throughout tests, benches and the CLI.

use super::similarity::{Orthogonal, Rotation, Similarity2};
use super::system::Ifs;
use crate::error::Result;
use crate::numerics::{Scalar, Vector2};

/// Homothety IFS `z ↦ scale·z + t_k` for each translation.
pub fn homothetic(label: &str, scale: Scalar, translations: &[Vector2]) -> Result<Ifs> {
    let maps = translations
        .iter()
        .map(|t| Similarity2::homothety(scale.clone(), t.clone()))
        .collect::<Result<Vec<_>>>()?;
    Ifs::new(label, maps)
}

fn grid(label: &str, n: i64, d: i64, cells: &[(i64, i64)]) -> Ifs {
    let ts: Vec<Vector2> = cells.iter().map(|&(x, y)| Vector2::ratio(x * n, d, y * n, d)).collect();
    homothetic(label, Scalar::ratio(n, d), &ts).expect("preset is valid")
}

/// Middle-thirds Cantor set on the x-axis: `{x/3, x/3 + 2/3}`.
pub fn cantor() -> Ifs {
    grid("cantor", 1, 3, &[(0, 0), (2, 0)])
}

/// `C×C` with maps ordered by corner `(0,0), (2,0), (0,2), (2,2)` (in units of 1/3).
pub fn cxc() -> Ifs {
    grid("cxc", 1, 3, &[(0, 0), (2, 0), (0, 2), (2, 2)])
}

/// Index into [`cxc`] of the cylinder with triadic digits `(dx, dy)`, each 0 or 2.
pub fn cxc_index(dx: u8, dy: u8) -> u8 {
    (dx / 2) + 2 * (dy / 2)
}

/// `C×[0,1]` as six maps of ratio 1/3, x-digit major.
pub fn c_times_interval() -> Ifs {
    grid("c_times_interval", 1, 3, &[(0, 0), (0, 1), (0, 2), (2, 0), (2, 1), (2, 2)])
}

/// The unit square from four maps of ratio 1/2.
pub fn unit_square() -> Ifs {
    grid("unit_square", 1, 2, &[(0, 0), (1, 0), (0, 1), (1, 1)])
}

/// The unit segment `[0,1]×{0}`: `{x/2, x/2 + 1/2}`.
pub fn segment() -> Ifs {
    grid("segment", 1, 2, &[(0, 0), (1, 0)])
}

/// `{z/2, z/2}`, whose attractor is the origin.
pub fn point() -> Ifs {
    grid("point", 1, 2, &[(0, 0), (0, 0)])
}

/// `{z/3, −z/3 + (1,1)}`: the second map carries a half turn.
pub fn half_turn() -> Ifs {
    let a = Similarity2::homothety(Scalar::ratio(1, 3), Vector2::zero()).unwrap();
    let b = Similarity2::new(
        Scalar::ratio(1, 3),
        Orthogonal::rotation(Rotation::turns(1, 2)),
        Vector2::ratio(1, 1, 1, 1),
    )
    .unwrap();
    Ifs::new("half_turn", vec![a, b]).unwrap()
}

pub fn by_name(name: &str) -> Option<Ifs> {
    Some(match name {
        "cantor" => cantor(),
        "cxc" => cxc(),
        "c_times_interval" => c_times_interval(),
        "unit_square" => unit_square(),
        "segment" => segment(),
        "point" => point(),
        "half_turn" => half_turn(),
        _ => return None,
    })
}

pub const NAMES: [&str; 7] = ["cantor", "cxc", "c_times_interval", "unit_square", "segment", "point", "half_turn"];
