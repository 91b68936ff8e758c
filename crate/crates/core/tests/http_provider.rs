use std::io::{BufRead, BufReader, Read, Write};
use std::net::TcpListener;
use std::sync::mpsc;
use std::time::{Duration, Instant};

use roadside_denm::providers::{
    depth_http, http_complete, DepthError, EndpointConfig, HttpModelProvider, ImageRef, ModelProvider, ModelRequest,
    ProviderError, Stage,
};

struct Captured {
    headers: Vec<String>,
    body: String,
}

/// Answers one connection with `status` and `body` after `delay`, and
/// hands back what it received.
fn serve_once(status: u16, reply: &'static str, delay: Duration) -> (String, mpsc::Receiver<Captured>) {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let url = format!("http://{}/v1/chat/completions", listener.local_addr().unwrap());
    let (tx, rx) = mpsc::channel();
    std::thread::spawn(move || {
        let (stream, _) = listener.accept().unwrap();
        let mut reader = BufReader::new(stream.try_clone().unwrap());
        let mut headers = Vec::new();
        let mut length = 0;
        loop {
            let mut line = String::new();
            reader.read_line(&mut line).unwrap();
            let line = line.trim_end().to_string();
            if line.is_empty() {
                break;
            }
            if let Some(v) = line.to_ascii_lowercase().strip_prefix("content-length:") {
                length = v.trim().parse().unwrap();
            }
            headers.push(line);
        }
        let mut body = vec![0; length];
        reader.read_exact(&mut body).unwrap();
        let _ = tx.send(Captured {
            headers,
            body: String::from_utf8_lossy(&body).into_owned(),
        });
        std::thread::sleep(delay);
        let mut stream = stream;
        let _ = write!(
            stream,
            "HTTP/1.1 {status} X\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{reply}",
            reply.len()
        );
    });
    (url, rx)
}

const COMPLETION: &str = r#"{"model":"stub-model","choices":[{"message":{"role":"assistant","content":"{\"situation_type\":\"NONE\",\"description\":\"clear\"}"}}],"usage":{"prompt_tokens":1200,"completion_tokens":34}}"#;

#[test]
fn completion_request_and_response() {
    let (url, rx) = serve_once(200, COMPLETION, Duration::from_millis(20));
    let mut endpoint = EndpointConfig::new(url, "stub-model");
    endpoint.auth_env_var = Some("DENM_TEST_TOKEN_OK".into());
    endpoint.params.insert("temperature".into(), serde_json::json!(0.0));
    std::env::set_var("DENM_TEST_TOKEN_OK", "secret");

    let response = http_complete(&endpoint, "look at this", b"\xFF\xD8jpeg", "image/jpeg").unwrap();
    assert!(response.text.contains("NONE"));
    assert_eq!(response.total_tokens(), Some(1234));
    assert!(response.latency_ms >= 20);
    assert_eq!(response.model_id, "stub-model");

    let seen = rx.recv().unwrap();
    assert!(seen
        .headers
        .iter()
        .any(|h| h == "authorization: Bearer secret" || h == "Authorization: Bearer secret"));
    let body: serde_json::Value = serde_json::from_str(&seen.body).unwrap();
    assert_eq!(body["model"], "stub-model");
    assert_eq!(body["temperature"], 0.0);
    assert_eq!(body["messages"][0]["content"][0]["text"], "look at this");
    assert!(body["messages"][0]["content"][1]["image_url"]["url"]
        .as_str()
        .unwrap()
        .starts_with("data:image/jpeg;base64,"));
}

#[test]
fn missing_usage_means_unknown_tokens() {
    let (url, _rx) = serve_once(200, r#"{"choices":[{"message":{"content":"{}"}}]}"#, Duration::ZERO);
    let response = http_complete(&EndpointConfig::new(url, "m"), "p", b"x", "image/png").unwrap();
    assert_eq!(response.total_tokens(), None);
    assert!(response.latency_ms > 0);
}

#[test]
fn missing_token_fails_before_sending() {
    let mut endpoint = EndpointConfig::new("http://127.0.0.1:9/never", "m");
    endpoint.auth_env_var = Some("DENM_TEST_TOKEN_UNSET".into());
    std::env::remove_var("DENM_TEST_TOKEN_UNSET");
    assert!(matches!(
        http_complete(&endpoint, "p", b"x", "image/png"),
        Err(ProviderError::AuthMissing(var)) if var == "DENM_TEST_TOKEN_UNSET"
    ));
}

#[test]
fn http_errors_are_not_retried() {
    let (url, rx) = serve_once(429, r#"{"error":"slow down"}"#, Duration::ZERO);
    assert!(matches!(
        http_complete(&EndpointConfig::new(url, "m"), "p", b"x", "image/png"),
        Err(ProviderError::HttpStatus(429))
    ));
    rx.recv().unwrap();
    assert!(rx.recv_timeout(Duration::from_millis(100)).is_err());
}

#[test]
fn slow_endpoint_times_out() {
    let (url, _rx) = serve_once(200, COMPLETION, Duration::from_millis(3000));
    let mut endpoint = EndpointConfig::new(url, "m");
    endpoint.timeout_ms = 1000;
    let start = Instant::now();
    let result = http_complete(&endpoint, "p", b"x", "image/png");
    assert!(
        matches!(result, Err(ProviderError::Timeout { timeout_ms: 1000 })),
        "{result:?}"
    );
    // configured timeout plus 10%
    assert!(start.elapsed() <= Duration::from_millis(1100), "{:?}", start.elapsed());
}

#[test]
fn provider_reads_the_frame_from_disk() {
    let (url, rx) = serve_once(200, COMPLETION, Duration::ZERO);
    let dir = tempfile::tempdir().unwrap();
    let frame = dir.path().join("f.png");
    std::fs::write(&frame, b"\x89PNG....").unwrap();
    let provider = HttpModelProvider::new(EndpointConfig::new(url, "m"));
    let image = ImageRef {
        image_id: "f".into(),
        path: frame,
        camera_id: "c".into(),
        width: None,
        height: None,
    };
    let response = provider
        .complete(&ModelRequest {
            image: &image,
            stage: Stage::Detect,
            prompt: "p",
            attempt: 0,
        })
        .unwrap();
    assert!(response.text.contains("clear"));
    let body: serde_json::Value = serde_json::from_str(&rx.recv().unwrap().body).unwrap();
    assert!(body["messages"][0]["content"][1]["image_url"]["url"]
        .as_str()
        .unwrap()
        .starts_with("data:image/png;base64,"));
}

#[test]
fn depth_endpoint_returns_a_grid() {
    let (url, rx) = serve_once(200, "P-DEPTH 3 2\n1.5 2 nan\n4 5 6\n", Duration::ZERO);
    let grid = depth_http(&EndpointConfig::new(url, ""), b"jpegbytes", "image/jpeg").unwrap();
    assert_eq!((grid.width, grid.height), (3, 2));
    assert!(grid.at(2, 0).is_nan());
    assert_eq!(grid.at(1, 1), 5.0);
    assert_eq!(rx.recv().unwrap().body, "jpegbytes");

    let (url, _rx) = serve_once(200, "P-DEPTH 3 2\n1 2 3\n", Duration::ZERO);
    assert!(matches!(
        depth_http(&EndpointConfig::new(url, ""), b"x", "image/jpeg"),
        Err(DepthError::DimensionMismatch { expected: 6, found: 3 })
    ));

    let (url, _rx) = serve_once(200, "P-DEPTH 1 1\n1\n", Duration::from_millis(3000));
    let mut slow = EndpointConfig::new(url, "");
    slow.timeout_ms = 300;
    assert!(matches!(
        depth_http(&slow, b"x", "image/jpeg"),
        Err(DepthError::Provider(ProviderError::Timeout { .. }))
    ));

    let (url, _rx) = serve_once(500, "boom", Duration::ZERO);
    assert!(matches!(
        depth_http(&EndpointConfig::new(url, ""), b"x", "image/jpeg"),
        Err(DepthError::Provider(ProviderError::HttpStatus(500)))
    ));
}
