//! Certified collision avoidance for kinematic manipulators, built from
//! signed-distance samples instead of analytic obstacle models.
//!
//! The library revolves around one object: a local quadratic barrier
//! certificate (a [`cbfsyn::QuadraticCbf`]) whose zero-super-level set is an
//! ellipsoid of configurations that are (a) contained in the ball reachable
//! within one control period and (b) certified collision-free with a
//! quantifiable probabilistic risk. The certificate is rebuilt at every
//! control step from nothing but batched signed-distance evaluations, so no
//! gradient or analytic description of the environment is ever required.
//!
//! Pipeline, bottom to top:
//!
//! * [`numerics`] — dense symmetric eigensolver and the special functions
//!   (regularized incomplete beta, log-binomial) the risk analysis needs.
//! * [`geometry`] — convex shapes, support functions and signed distance via
//!   GJK/EPA with analytic fast paths.
//! * [`robot`] — serial-chain kinematics, joint boxes, one-step reachable
//!   balls.
//! * [`sdfield`] — whole-scene signed-distance composition (robot↔obstacle
//!   and robot↔robot), batched over configuration samples.
//! * [`scenario`] — sampling, support-constraint counting, and the a-priori /
//!   a-posteriori risk bounds that turn "it held on N samples" into a
//!   probability statement.
//! * [`sdp`] — a small dense semidefinite solver (primal-dual interior
//!   point) that the synthesis layer targets.
//! * [`cbfsyn`] — assembles and solves the barrier-synthesis program.
//! * [`control`] — the waypoint tracker, the safety filter, and the
//!   fixed-step simulator plus on-disk formats (robot / scene / plan JSON,
//!   trace CSV).
//!
//! The `scbf` binary exposes the simulator, the sample-size calculator, a
//! one-shot synthesizer, a Monte-Carlo certificate checker, and a timing
//! benchmark; see the README for CLI usage.

pub mod consts;
pub mod numerics;

pub mod geometry;
pub mod robot;

pub mod cbfsyn;
pub mod control;
pub mod scenario;
pub mod sdfield;
pub mod sdp;
