//! Locks the laser onto the comb it is engraving and compares with a free
//! running laser, then kicks the locked laser by 1.5 comb periods.
//!
//! Runs on a 20 MHz comb; each co-simulation takes a few seconds.

use afc_sim::config::ScenarioConfig;
use afc_sim::scenario::lock_run;
use afc_sim::servo::{DriftStep, LockConfig, LockEvent, LockRun};

fn report(label: &str, run: &LockRun) {
    println!(
        "{label:<24} rms residual {:>9.0} Hz   final contrast {:.3}",
        run.rms_detuning,
        run.metrics.map_or(0.0, |m| m.contrast)
    );
}

fn main() -> afc_sim::Result<()> {
    let cfg = ScenarioConfig::default();
    let nu_m = cfg.fm.nu_m_hz;
    let base = cfg.servo.lock(cfg.seeds.drift);

    report(
        "locked",
        &lock_run(
            &cfg,
            &LockConfig {
                enabled: true,
                ..base.clone()
            },
        )?,
    );
    report(
        "free running",
        &lock_run(
            &cfg,
            &LockConfig {
                enabled: false,
                ..base.clone()
            },
        )?,
    );

    let mut fast = base.clone();
    fast.drift.rate = cfg.servo.erasure_drift_hz_per_s;
    report(
        "locked, fast drift",
        &lock_run(
            &cfg,
            &LockConfig {
                enabled: true,
                ..fast.clone()
            },
        )?,
    );
    report(
        "free, fast drift",
        &lock_run(&cfg, &LockConfig { enabled: false, ..fast })?,
    );

    let mut kicked = base;
    kicked.drift.steps.push(DriftStep {
        time: 0.3,
        size: 1.5 * nu_m,
    });
    let run = lock_run(&cfg, &kicked)?;
    report("locked, 1.5 nu_m kick", &run);
    for e in &run.events {
        if let LockEvent::Relocked {
            t_s,
            tooth,
            previous_tooth,
        } = e
        {
            println!("  relocked at {t_s:.4} s on tooth {tooth} (was {previous_tooth})");
        }
    }
    let c: Vec<String> = run.cycle_metrics.iter().map(|m| format!("{:.3}", m.contrast)).collect();
    println!("  contrast per cycle: {}", c.join(" "));
    Ok(())
}
