use std::path::Path;

use refinery_cli::server::{serve, AppState};
use refinery_cli::{build_verifier, Config};
use refinery_core::refinement::Library;
use refinery_core::verifier::DomainSpec;
use serde_json::{json, Value};
use ureq::Agent;

const BISECTION: &str = "x = 0
y = N+1
while y > x+e:
    if (x+y)/2*(x+y)/2 > N:
        y = (x+y)/2
    else:
        x = (x+y)/2
";

fn sqrt_file(name: &str) -> String {
    std::fs::read_to_string(Path::new(env!("CARGO_MANIFEST_DIR")).join("../../corpus/sqrt").join(name)).unwrap()
}

/// Serves on an ephemeral port from a background runtime; returns the base URL.
fn start() -> String {
    let cfg = Config::default();
    let verifier = build_verifier(cfg.verifier_config(DomainSpec::default())).unwrap();
    let state = AppState::new(cfg, verifier, Library::new());
    let (tx, rx) = std::sync::mpsc::channel();
    std::thread::spawn(move || {
        let rt = tokio::runtime::Runtime::new().unwrap();
        rt.block_on(async {
            let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
            tx.send(listener.local_addr().unwrap()).unwrap();
            serve(listener, state).await.unwrap();
        });
    });
    format!("http://{}", rx.recv().unwrap())
}

struct Client {
    base: String,
    agent: Agent,
}

impl Client {
    fn new() -> Self {
        let agent = Agent::config_builder().http_status_as_error(false).build().into();
        Client { base: start(), agent }
    }

    fn post(&self, path: &str, body: Value) -> (u16, Value) {
        let mut r = self.agent.post(format!("{}{path}", self.base)).send_json(body).unwrap();
        (r.status().as_u16(), r.body_mut().read_json().unwrap())
    }

    fn get(&self, path: &str) -> (u16, Value) {
        let mut r = self.agent.get(format!("{}{path}", self.base)).call().unwrap();
        (r.status().as_u16(), r.body_mut().read_json().unwrap())
    }

    fn session(&self, oracle: &str) -> String {
        let body = json!({"api": 1, "spec": sqrt_file("problem.spec"), "oracle": oracle, "domains": sqrt_file("domain.toml")});
        let (status, v) = self.post("/sessions", body);
        assert_eq!(status, 201, "{v}");
        v["id"].as_str().unwrap().to_string()
    }

    fn apply(&self, id: &str, node: &str, law: &str) -> (u16, Value) {
        self.post(&format!("/sessions/{id}/nodes/{node}/apply"), json!({"api": 1, "law": law}))
    }

    fn verify(&self, id: &str, node: &str) -> Vec<Value> {
        let (status, v) = self.post(&format!("/sessions/{id}/nodes/{node}/verify"), json!({}));
        assert_eq!(status, 200, "{v}");
        v["obligations"].as_array().unwrap().clone()
    }
}

#[test]
fn sqrt_session_end_to_end() {
    let c = Client::new();
    let id = c.session("heuristic");

    let (status, v) = c.apply(&id, "0", "seq mid: x*x <= N < y*y");
    assert_eq!(status, 200, "{v}");
    assert_eq!(v["children"], json!(["0.0", "0.1"]));

    // the wrong initialisation is refuted with N below one
    assert_eq!(c.apply(&id, "0.0", "assign x := 0, y := N").0, 200);
    let obs = c.verify(&id, "0.0");
    assert_eq!(obs[0]["status"], "refuted", "{obs:?}");
    let cex = obs[0]["counterexample"].as_str().unwrap();
    assert!(cex.contains("N = 0") || cex.contains("N = 1/2"), "{cex}");
    let (status, v) = c.post(&format!("/sessions/{id}/nodes/0.0/backtrack"), json!({"reason": "N < 1"}));
    assert_eq!(status, 200, "{v}");
    assert_eq!(v["node"]["status"], "open");

    for (node, law) in [
        ("0.0", "assign x := 0, y := N+1"),
        ("0.1", "iterate I: x*x <= N < y*y G: y > x+e V: y-x mode: initialised"),
    ] {
        assert_eq!(c.apply(&id, node, law).0, 200);
        assert!(c.verify(&id, node).iter().all(|o| o["status"] == "proved"));
    }

    // a suggestion is not applied
    let (status, v) = c.post(&format!("/sessions/{id}/nodes/0.1.0/suggest"), json!({}));
    assert_eq!(status, 200, "{v}");
    let law = v["law"].as_str().unwrap();
    assert!(law.starts_with("ifelse") || law.starts_with("assign"), "{law}");
    let (_, t) = c.get(&format!("/sessions/{id}/tree"));
    assert!(t["tree"]["open"].as_array().unwrap().contains(&json!("0.1.0")));

    assert_eq!(c.apply(&id, "0.1.0", "ifelse G: (x+y)/2*(x+y)/2 > N").0, 200);
    for (node, law) in [("0.1.0.0", "assign y := (x+y)/2"), ("0.1.0.1", "assign x := (x+y)/2")] {
        assert_eq!(c.apply(&id, node, law).0, 200);
        assert!(c.verify(&id, node).iter().all(|o| o["status"] == "proved"));
    }

    let (status, v) = c.get(&format!("/sessions/{id}/program"));
    assert_eq!(status, 200, "{v}");
    assert_eq!(v["program"], BISECTION);
    assert_eq!(v["api"], 1);

    let (_, e) = c.get(&format!("/sessions/{id}/events"));
    let kinds: Vec<&str> = e["events"].as_array().unwrap().iter().map(|e| e["kind"].as_str().unwrap()).collect();
    assert_eq!(kinds.iter().filter(|k| **k == "backtracked").count(), 1);
    assert_eq!(kinds.len(), 13);
}

#[test]
fn errors_map_to_status_codes() {
    let c = Client::new();
    let id = c.session("heuristic");
    assert_eq!(c.apply(&id, "0", "skip").0, 200);
    // refined node
    let (status, v) = c.apply(&id, "0", "skip");
    assert_eq!(status, 409, "{v}");
    assert_eq!(v["kind"], "conflict");
    // unknown session and node
    assert_eq!(c.apply("s999", "0", "skip").0, 404);
    assert_eq!(c.get("/sessions/s999/tree").0, 404);
    assert_eq!(c.apply(&id, "0.7", "skip").0, 404);
    // program of an unclosed tree
    assert_eq!(c.get(&format!("/sessions/{id}/program")).0, 409);

    let other = c.session("heuristic");
    let (status, v) = c.apply(&other, "0", "assign z := 0");
    assert_eq!(status, 422, "{v}");
    assert_eq!(v["kind"], "invalid");
    let (status, _) = c.post("/sessions", json!({"spec": "name: broken"}));
    assert_eq!(status, 422);
    let (status, _) = c.post("/sessions", json!({"api": 2, "spec": sqrt_file("problem.spec")}));
    assert_eq!(status, 422);
    let (status, _) = c.post("/sessions", json!({"nospec": true}));
    assert_eq!(status, 422);
}

#[test]
fn describe_lists_laws_and_strategies() {
    let c = Client::new();
    let (status, v) = c.get("/api");
    assert_eq!(status, 200);
    assert_eq!(v["api"], 1);
    let oracles: Vec<&str> = v["oracles"].as_array().unwrap().iter().map(|o| o.as_str().unwrap()).collect();
    assert_eq!(oracles, ["heuristic", "remote", "scripted"]);
    assert!(v["laws"].as_array().unwrap().len() >= 9);
}
