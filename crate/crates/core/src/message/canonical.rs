//! Float rendering helpers for the canonical JSON form.
//!
//! serde_json already prints the shortest decimal that round-trips (at most
//! 17 significant digits). The only extra rule is that `-0.0` is written as
//! `0.0`, so numerically equal messages encode to equal bytes.

use serde::Serializer;

fn canon(x: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        x
    }
}

pub(crate) fn canon_f64<S: Serializer>(x: &f64, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_f64(canon(*x))
}

pub(crate) fn canon_f64_vec<S: Serializer>(xs: &[f64], s: S) -> Result<S::Ok, S::Error> {
    s.collect_seq(xs.iter().map(|x| canon(*x)))
}
