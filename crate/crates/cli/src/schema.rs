use serde_json::{json, Value};

fn csv(columns: &[&str], note: &str) -> Value {
    json!({ "format": "csv", "columns": columns, "note": note })
}

/// Output layout of every subcommand. Floats in CSV output use `{:.16e}`.
pub fn schema() -> Value {
    json!({
        "version": env!("CARGO_PKG_VERSION"),
        "exit_codes": { "0": "success", "2": "usage", "3": "convergence failure", "4": "i/o" },
        "error": {
            "format": "json on stderr",
            "fields": ["kind", "message", "exit_code", "requested?", "certified?", "truncation?", "partial_outputs?"]
        },
        "partial_suffix": ".partial",
        "commands": {
            "spectrum": csv(&["index", "eigenvalue", "parity", "converged"],
                "1-based index; parity is +, - or empty"),
            "spacing": csv(&["n", "gap", "type"],
                "type is positive, negative, mixed or empty"),
            "density": csv(&["bin_left", "bin_right", "density"],
                "density is the bin mass divided by the bin width"),
            "cdf": csv(&["alpha", "h"], "h(alpha) = #{gaps < alpha} / number of levels"),
            "sweep-eps": {
                "out": csv(&["epsilon", "index", "eigenvalue"], "eigenvalue shifted by +g^2 unless --raw"),
                "density_out": csv(&["epsilon", "bin_left", "bin_right", "density"], "")
            },
            "alpha0-map": csv(&["g", "delta", "alpha0"], "row-major in g"),
            "proportions": csv(&["n", "d", "r", "d_eta"], "empty where undefined"),
            "constraint-curves": csv(&["g", "curve_id", "renormalized_x"],
                "header ends in x with --unrenormalized"),
            "envelope": {
                "out": {
                    "format": "json",
                    "fields": ["g", "delta", "parity", "n_from", "n_to", "asymptotic_from",
                               "threshold", "peaks", "periods", "power_law", "linear", "period_model"]
                },
                "peaks_out": csv(&["n", "gap"], ""),
                "periods_out": csv(&["index", "n", "period"], "n is the peak that opens the period")
            },
            "compare-asymptotic": csv(&["n", "computed", "asymptotic", "diff"], "0-based n"),
            "fit-proportion": {
                "in": csv(&["n", "d"], "other columns are ignored; rows with empty d are skipped"),
                "out": {
                    "format": "json",
                    "fields": ["fit", "limit"],
                    "fit_fields": ["model", "params", "sse", "r_square", "rmse", "converged",
                                   "iterations", "intervals?", "message?"]
                }
            },
            "predict": {
                "format": "json",
                "fields": ["epsilon", "atoms", "constants", "containment_interval"]
            },
            "schema": { "format": "json" }
        }
    })
}
