//! Named fixtures as system files.

use kreiss_core::fixtures::{self, Design};
use kreiss_core::sysmodel::close_loop;

use crate::error::{CliError, CliResult};
use crate::format::SystemFile;

/// Fixed names, in listing order. `grcar-N` is accepted for any `N ≥ 2`.
pub const NAMES: [&str; 15] = [
    "grcar-10",
    "grcar-20",
    "grcar-30",
    "grcar-50",
    "example-7x7",
    "controller-kreiss",
    "controller-numabs",
    "controller-h2match",
    "controller-wcenergy",
    "closed-loop-kreiss",
    "closed-loop-numabs",
    "closed-loop-h2match",
    "closed-loop-wcenergy",
    "nl-A",
    "nl-closed-loop",
];

/// Further names: the linear part of the nonlinear example and its controller.
pub const EXTRA_NAMES: [&str; 2] = ["nl-plant", "nl-controller"];

fn design(name: &str) -> Option<Design> {
    Design::ALL.into_iter().find(|d| d.name() == name)
}

pub fn lookup(name: &str) -> CliResult<SystemFile> {
    let unknown = || CliError::Usage(format!("unknown fixture `{name}`; see `kreiss fixtures list`"));
    if let Some(n) = name.strip_prefix("grcar-") {
        let n: usize = n.parse().map_err(|_| unknown())?;
        if n < 2 {
            return Err(CliError::Usage(format!("grcar size must be at least 2, got {n}")));
        }
        return Ok(SystemFile::ClosedLoop {
            a: fixtures::grcar(n),
            plant_states: n,
        });
    }
    if let Some(d) = name.strip_prefix("controller-").and_then(design) {
        return Ok(SystemFile::Controller(fixtures::printed_controller(d)));
    }
    if let Some(d) = name.strip_prefix("closed-loop-").and_then(design) {
        let acl = close_loop(&fixtures::example_plant(), &fixtures::printed_controller(d))?;
        return Ok(SystemFile::ClosedLoop {
            a: acl.a().clone(),
            plant_states: fixtures::example_plant().nstates(),
        });
    }
    match name {
        "example-7x7" => Ok(SystemFile::Plant(fixtures::example_plant())),
        "nl-A" => Ok(SystemFile::ClosedLoop {
            a: fixtures::nonlinear_a(fixtures::NL_REYNOLDS),
            plant_states: 2,
        }),
        "nl-closed-loop" => Ok(SystemFile::ClosedLoop {
            a: fixtures::nonlinear_printed_closed_loop(),
            plant_states: 2,
        }),
        "nl-plant" => Ok(SystemFile::Plant(fixtures::nonlinear_linear_part(fixtures::NL_REYNOLDS))),
        "nl-controller" => Ok(SystemFile::Controller(fixtures::nonlinear_controller())),
        _ => Err(unknown()),
    }
}

/// One-line description for `fixtures list`.
pub fn describe(name: &str) -> CliResult<String> {
    let f = lookup(name)?;
    let shape = match &f {
        SystemFile::Plant(s) => format!("{} states, {} inputs, {} outputs", s.nstates(), s.ninputs(), s.noutputs()),
        SystemFile::Controller(k) => format!("order {}, {} inputs, {} outputs", k.order(), k.ninputs(), k.noutputs()),
        SystemFile::ClosedLoop { a, plant_states } => format!("{} states, {plant_states} plant states", a.nrows()),
    };
    Ok(format!("{name:<22} {:<12} {shape}", f.kind().name()))
}
