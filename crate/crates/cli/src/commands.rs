//! One function per subcommand. Each computes its whole table before
//! anything is written.

use qtraj_core::{
    compare_engines, find_singularities, identity_suite, phase_velocity, trace_bd, trace_floyd,
    transform_table, Flags, ReducedAction, Sample, Trajectory, TrajectoryEngine,
};

use crate::config::RunConfig;
use crate::error::CliError;
use crate::output::{Cell, Table};

pub const TRACE_COLUMNS: [&str; 8] = [
    "x", "t", "v_group", "v_bd", "v_phase", "dS0_dx", "S0", "flags",
];

fn flags(f: Flags) -> Cell {
    Cell::Tokens(f.iter().map(|f| f.token()).collect())
}

fn trace_row(
    ra: &ReducedAction,
    engine: TrajectoryEngine,
    s: &Sample,
) -> Result<Vec<Cell>, CliError> {
    let velocity = Cell::Opt(s.v.finite());
    let (group, bd) = match engine {
        TrajectoryEngine::Floyd => (velocity, Cell::Empty),
        TrajectoryEngine::Bd => (Cell::Empty, velocity),
    };
    Ok(vec![
        Cell::Num(s.x),
        Cell::Num(s.t),
        group,
        bd,
        Cell::Num(phase_velocity(ra, s.x)?),
        Cell::Num(ra.conjugate_momentum(s.x)?),
        Cell::Num(ra.s0(s.x)?),
        flags(s.flags),
    ])
}

pub fn trace(config: &RunConfig, engine: TrajectoryEngine) -> Result<Table, CliError> {
    let ra = config.reduced_action()?;
    let trajectory: Trajectory = match engine {
        TrajectoryEngine::Floyd => trace_floyd(&ra, config.x_range()?, config.x_grid.samples)?,
        TrajectoryEngine::Bd => trace_bd(
            &ra,
            config.t_range()?,
            config.t_grid.step,
            config.bd_options(),
        )?,
    };
    let mut table = Table::new(&TRACE_COLUMNS);
    for s in &trajectory.samples {
        table.push(trace_row(&ra, engine, s)?);
    }
    Ok(table)
}

pub fn compare(config: &RunConfig) -> Result<Table, CliError> {
    let ra = config.reduced_action()?;
    let cmp = compare_engines(
        &ra,
        config.x_range()?,
        config.x_grid.samples,
        config.bd_options(),
    )?;
    let mut columns = TRACE_COLUMNS.to_vec();
    columns.push("abs_diff");
    let mut table = Table::new(&columns);
    for r in &cmp.rows {
        table.push(vec![
            Cell::Num(r.x),
            Cell::Num(r.t),
            Cell::Opt(r.v_group.finite()),
            Cell::Num(r.v_bd),
            Cell::Num(r.v_phase),
            Cell::Num(r.momentum),
            Cell::Num(r.s0),
            flags(r.flags),
            Cell::Num(r.abs_diff),
        ]);
    }
    table
        .meta
        .push(("max_abs_diff", Cell::Num(cmp.max_abs_diff)));
    Ok(table)
}

pub fn singularities(config: &RunConfig) -> Result<Table, CliError> {
    let ra = config.reduced_action()?;
    let set = find_singularities(&ra, config.x_range()?)?;
    let mut table = Table::new(&["x_star", "bracket_lo", "bracket_hi", "transit_time"]);
    for r in &set.roots {
        table.push(vec![
            Cell::Num(r.x_star),
            Cell::Num(r.bracket.lo()),
            Cell::Num(r.bracket.hi()),
            Cell::Num(r.transit_time),
        ]);
    }
    Ok(table)
}

pub fn transform(config: &RunConfig) -> Result<Table, CliError> {
    let ra = config.reduced_action()?;
    let xs = config.x_range()?.linspace(config.x_grid.samples);
    let tol = &config.tolerances;
    let result = transform_table(&ra, config.x_ref, &xs, tol.quad_tol, tol.eps_turn)?;
    let mut table = Table::new(&["x", "x_hat", "region"]);
    for r in &result.samples {
        table.push(vec![
            Cell::Num(r.x),
            Cell::Opt(r.x_hat),
            Cell::Text(r.region.as_str().to_string()),
        ]);
    }
    Ok(table)
}

/// Runs the identity suite; the flag is the overall verdict.
pub fn check(config: &RunConfig) -> Result<(Table, bool), CliError> {
    let ra = config.reduced_action()?;
    let xs = config.x_range()?.linspace(config.x_grid.samples);
    let report = identity_suite(
        &ra,
        &xs,
        config.t_range()?,
        config.t_grid.step,
        config.suite_tolerances(),
        config.bd_options(),
    )?;
    let mut table = Table::new(&["name", "residual", "tolerance", "pass"]);
    for e in &report.entries {
        table.push(vec![
            Cell::Text(e.name.clone()),
            Cell::Num(e.residual),
            Cell::Num(e.tolerance),
            Cell::Bool(e.pass),
        ]);
    }
    let overall = report.overall();
    table.meta.push(("overall", Cell::Bool(overall)));
    Ok((table, overall))
}
