mod common;

use common::{app, call, cli, fixture, read};

fn path(name: &str) -> String {
    fixture(name).display().to_string()
}

#[tokio::test]
async fn up_matches_propagate() {
    let model = path("aux_feedwater.json");
    let evidence = path("evidence_cst2_failed.json");
    let scenarios: [(Vec<&str>, Option<&str>, &str); 3] = [
        (vec![], None, ""),
        (
            vec!["--evidence", &evidence],
            Some("evidence_cst2_failed.json"),
            "",
        ),
        (
            vec!["--evidence", &evidence, "--threshold", "0.5"],
            Some("evidence_cst2_failed.json"),
            r#"{"threshold": 0.5}"#,
        ),
    ];
    for (flags, evidence_file, body) in scenarios {
        let mut args = vec!["up", model.as_str()];
        args.extend(flags);
        let (code, out, _) = cli(&args);
        assert_eq!(code, 0);

        let app = app();
        call(&app, "POST", "/model", &read("aux_feedwater.json")).await;
        if let Some(file) = evidence_file {
            call(&app, "PUT", "/evidence", &read(file)).await;
        }
        let (_, http) = call(&app, "POST", "/propagate", body).await;
        assert_eq!(out, http, "{args:?}");
    }
}

#[tokio::test]
async fn down_matches_pathsets() {
    let model = path("aux_feedwater.json");
    let app = app();
    call(&app, "POST", "/model", &read("aux_feedwater.json")).await;
    for (node, raw) in [
        ("Supply Feedwater", false),
        ("Supply Feedwater", true),
        ("Manage Condensation Tanks", false),
        ("Ensure safe and effective operation of the system", false),
    ] {
        let mut args = vec!["down", model.as_str(), "--node", node];
        if raw {
            args.push("--raw");
        }
        let (code, out, _) = cli(&args);
        assert_eq!(code, 0);
        let body = serde_json::json!({"target": node, "raw": raw}).to_string();
        let (_, http) = call(&app, "POST", "/pathsets", &body).await;
        assert_eq!(out, http, "{node} raw={raw}");
    }
}
