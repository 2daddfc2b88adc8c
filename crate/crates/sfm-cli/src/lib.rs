//! CLI front end for the sfm library: generator mini-language plus the
//! `sfm run` dispatcher. The parsing layers live in the library target so
//! fuzz harnesses can drive them directly.

pub mod genspec;
pub mod run;
