//! Runs the guide's code snippets as doc-tests (`cargo test --doc`), keeping
//! the book in `book/src/` compiling against the current API.

#[doc = include_str!("../../../book/src/introduction.md")]
mod introduction {}
#[doc = include_str!("../../../book/src/problem.md")]
mod problem {}
#[doc = include_str!("../../../book/src/oracles.md")]
mod oracles {}
#[doc = include_str!("../../../book/src/algorithm.md")]
mod algorithm {}
#[doc = include_str!("../../../book/src/schedulers.md")]
mod schedulers {}
#[doc = include_str!("../../../book/src/noise.md")]
mod noise {}
#[doc = include_str!("../../../book/src/monitors.md")]
mod monitors {}
#[doc = include_str!("../../../book/src/reference.md")]
mod reference {}
#[doc = include_str!("../../../book/src/cli.md")]
mod cli {}
