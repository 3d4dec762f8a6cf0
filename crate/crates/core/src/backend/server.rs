//! Serves any [`ModelBackend`] over the wire protocol. `mock-serve` uses it to
//! expose the mock; tests use it to exercise [`super::HttpBackend`].

use std::io;
use std::net::{SocketAddr, TcpListener, ToSocketAddrs};
use std::sync::Arc;
use std::thread::{self, JoinHandle};

use serde::de::DeserializeOwned;
use serde::Serialize;
use socket2::{Domain, Protocol, Socket, Type};

use super::wire::{self, *};
use super::ModelBackend;

/// Status code and JSON body for one request.
pub fn handle(backend: &dyn ModelBackend, method: &str, path: &str, body: &str) -> (u16, String) {
    fn parse<T: DeserializeOwned>(body: &str) -> Result<T, (u16, String)> {
        serde_json::from_str(body).map_err(|e| (400, format!("bad request: {e}")))
    }
    fn reply<T: Serialize>(value: &T) -> (u16, String) {
        (200, serde_json::to_string(value).expect("wire types serialize"))
    }

    let result: Result<(u16, String), (u16, String)> = (|| {
        let internal = |e: super::BackendError| (500, e.to_string());
        match (method, path) {
            ("GET", wire::HEALTH) => Ok(reply(&HealthResponse::ok())),
            ("POST", wire::QA) => {
                let req: QaRequest = parse(body)?;
                let out = backend.qa(&req.question, &req.context).map_err(internal)?;
                Ok(reply(&QaResponse::from_output(&out)))
            }
            ("POST", wire::SUMMARIZE) => {
                let req: SummarizeRequest = parse(body)?;
                let summary = backend.summarize(&req.text, req.max_tokens).map_err(internal)?;
                Ok(reply(&SummarizeResponse { summary }))
            }
            ("POST", wire::EMBED) => {
                let req: EmbedRequest = parse(body)?;
                let vectors = backend.embed(&req.sentences).map_err(internal)?;
                Ok(reply(&EmbedResponse::from_vectors(vectors)))
            }
            ("POST", wire::SENTIMENT) => {
                let req: SentimentRequest = parse(body)?;
                let probs = backend.sentiment(&req.text).map_err(internal)?;
                Ok(reply(&SentimentResponse {
                    probs: probs.to_vec(),
                }))
            }
            _ => Err((404, format!("no route for {method} {path}"))),
        }
    })();
    result.unwrap_or_else(|(status, error)| {
        (status, serde_json::to_string(&ErrorResponse { error }).expect("serializes"))
    })
}

/// A running server; dropping the handle does not stop it, call
/// [`ServerHandle::shutdown`].
pub struct ServerHandle {
    addr: SocketAddr,
    server: Arc<tiny_http::Server>,
    workers: Vec<JoinHandle<()>>,
}

impl ServerHandle {
    pub fn addr(&self) -> SocketAddr {
        self.addr
    }

    pub fn url(&self) -> String {
        format!("http://{}", self.addr)
    }

    /// Blocks until the server stops.
    pub fn join(self) {
        for w in self.workers {
            let _ = w.join();
        }
    }

    pub fn shutdown(self) {
        for _ in &self.workers {
            self.server.unblock();
        }
        self.join();
    }
}

/// Accepted sockets inherit TCP_NODELAY from the listener. Without it the
/// response writer's small buffer splits larger bodies across segments and
/// each one waits out the client's delayed ACK.
fn nodelay_listener(addr: &str) -> io::Result<TcpListener> {
    let addr = addr
        .to_socket_addrs()?
        .next()
        .ok_or_else(|| io::Error::new(io::ErrorKind::InvalidInput, format!("no address for {addr}")))?;
    let socket = Socket::new(Domain::for_address(addr), Type::STREAM, Some(Protocol::TCP))?;
    socket.set_reuse_address(true)?;
    socket.set_nodelay(true)?;
    socket.bind(&addr.into())?;
    socket.listen(128)?;
    Ok(socket.into())
}

/// Binds `addr` (use port 0 for an ephemeral port) and serves with
/// `workers` threads.
pub fn serve(
    backend: Arc<dyn ModelBackend>,
    addr: &str,
    workers: usize,
) -> io::Result<ServerHandle> {
    let server = tiny_http::Server::from_listener(nodelay_listener(addr)?, None)
        .map_err(io::Error::other)?;
    let addr = server
        .server_addr()
        .to_ip()
        .ok_or_else(|| io::Error::other("server is not bound to an IP socket"))?;
    let server = Arc::new(server);
    let workers = (0..workers.max(1))
        .map(|_| {
            let server = Arc::clone(&server);
            let backend = Arc::clone(&backend);
            thread::spawn(move || {
                while let Ok(mut request) = server.recv() {
                    let mut body = String::new();
                    let (status, payload) = match request.as_reader().read_to_string(&mut body) {
                        Ok(_) => handle(
                            backend.as_ref(),
                            request.method().as_str(),
                            request.url(),
                            &body,
                        ),
                        Err(e) => (400, format!("{{\"error\":\"unreadable body: {e}\"}}")),
                    };
                    let header = tiny_http::Header::from_bytes("Content-Type", "application/json")
                        .expect("static header");
                    let response = tiny_http::Response::from_string(payload)
                        .with_status_code(status)
                        .with_header(header);
                    let _ = request.respond(response);
                }
            })
        })
        .collect();
    Ok(ServerHandle {
        addr,
        server,
        workers,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::backend::MockBackend;

    #[test]
    fn routes() {
        let mock = MockBackend::new(1);
        let (status, body) = handle(&mock, "GET", "/health", "");
        assert_eq!(status, 200);
        assert_eq!(body, r#"{"status":"ok","protocol":"1"}"#);

        let (status, body) = handle(&mock, "POST", "/sentiment", r#"{"text":"great"}"#);
        assert_eq!(status, 200);
        let probs: SentimentResponse = serde_json::from_str(&body).unwrap();
        assert!(probs.into_probs().is_ok());

        let (status, _) = handle(&mock, "POST", "/sentiment", "{");
        assert_eq!(status, 400);
        let (status, body) = handle(&mock, "POST", "/qa", r#"{"question":"q","context":" "}"#);
        assert_eq!(status, 500);
        assert!(body.starts_with(r#"{"error":"#));
        let (status, _) = handle(&mock, "GET", "/nope", "");
        assert_eq!(status, 404);
    }
}
