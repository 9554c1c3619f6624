//! Fixed-size ambient vectors. Every manifold here embeds in at most four
//! dimensions, so points are `[f64; 4]` padded with zeros.

pub type Point = [f64; 4];

pub const ZERO: Point = [0.0; 4];

#[inline]
pub fn dot(a: &Point, b: &Point) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2] + a[3] * b[3]
}

#[inline]
pub fn norm(a: &Point) -> f64 {
    dot(a, a).sqrt()
}

#[inline]
pub fn sub(a: &Point, b: &Point) -> Point {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2], a[3] - b[3]]
}

#[inline]
pub fn add(a: &Point, b: &Point) -> Point {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2], a[3] + b[3]]
}

#[inline]
pub fn scale(a: &Point, s: f64) -> Point {
    [a[0] * s, a[1] * s, a[2] * s, a[3] * s]
}

/// `a + s * b`
#[inline]
pub fn axpy(a: &Point, s: f64, b: &Point) -> Point {
    [a[0] + s * b[0], a[1] + s * b[1], a[2] + s * b[2], a[3] + s * b[3]]
}

#[inline]
pub fn dist2(a: &Point, b: &Point) -> f64 {
    let d = sub(a, b);
    dot(&d, &d)
}

#[inline]
pub fn dist(a: &Point, b: &Point) -> f64 {
    dist2(a, b).sqrt()
}

/// Cross product of the first three components.
#[inline]
pub fn cross3(a: &Point, b: &Point) -> Point {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
        0.0,
    ]
}

pub fn from_slice(v: &[f64]) -> Point {
    let mut p = ZERO;
    for (k, x) in v.iter().take(4).enumerate() {
        p[k] = *x;
    }
    p
}
