//! Helpers shared by the integration tests. Not every test binary uses all of them.
#![allow(dead_code)]

mod http;
pub mod run;
pub mod sitemap;

#[allow(unused_imports)]
pub use http::{serve, Reply, Seen, Server};
