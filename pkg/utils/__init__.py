# makes utils an importable package
# Physics: params, potential, scatter1d, timedomain, subtractor, twophoton, repeater.
# Plumbing: errors, logging_setup, exporters, result_cache, sweeps, plots.
