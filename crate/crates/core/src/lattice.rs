//! Integer lattice points of dimension at most [`MAX_DIM`].

/// Highest supported lattice dimension.
pub const MAX_DIM: usize = 4;

/// A point of `Z^d`; coordinates at index `>= d` are kept at zero.
pub type Point = [i32; MAX_DIM];

pub const ORIGIN: Point = [0; MAX_DIM];

#[inline]
pub fn add(a: &Point, b: &Point) -> Point {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2], a[3] + b[3]]
}

#[inline]
pub fn sub(a: &Point, b: &Point) -> Point {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2], a[3] - b[3]]
}

#[inline]
pub fn neg(a: &Point) -> Point {
    [-a[0], -a[1], -a[2], -a[3]]
}

#[inline]
pub fn dot(a: &Point, b: &Point) -> i64 {
    a.iter().zip(b).map(|(&x, &y)| x as i64 * y as i64).sum()
}

#[inline]
pub fn norm2(a: &Point) -> i64 {
    dot(a, a)
}

pub fn coord_sum(a: &Point) -> i64 {
    a.iter().map(|&x| x as i64).sum()
}

/// Builds a point from a coordinate slice of length at most [`MAX_DIM`].
pub fn point(coords: &[i32]) -> Point {
    assert!(coords.len() <= MAX_DIM, "at most {MAX_DIM} coordinates");
    let mut p = ORIGIN;
    p[..coords.len()].copy_from_slice(coords);
    p
}

pub fn format_point(p: &Point, dim: usize) -> String {
    p[..dim].iter().map(|c| c.to_string()).collect::<Vec<_>>().join(",")
}
