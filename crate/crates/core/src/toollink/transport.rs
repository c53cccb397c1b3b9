//! Line-oriented duplex transports and a TCP front end for the mock server.

use super::mock::{MockServer, Session};
use std::io::{self, BufRead, BufReader, Write};
use std::net::{SocketAddr, TcpListener, TcpStream};
use std::sync::Arc;
use std::thread::{self, JoinHandle};

/// Sends one request line and returns one reply line.
pub trait Transport {
    fn exchange(&mut self, line: &str) -> io::Result<String>;
}

/// Direct calls into a server in the same process, with its own session.
#[derive(Debug)]
pub struct InProcess {
    server: Arc<MockServer>,
    session: Session,
}

impl InProcess {
    pub fn new(server: Arc<MockServer>) -> Self {
        InProcess {
            server,
            session: Session::default(),
        }
    }
}

impl Transport for InProcess {
    fn exchange(&mut self, line: &str) -> io::Result<String> {
        Ok(self.server.handle_line(&mut self.session, line))
    }
}

/// Newline-delimited records over any byte stream.
#[derive(Debug)]
pub struct LineTransport<S: io::Read + Write> {
    reader: BufReader<S>,
}

impl LineTransport<TcpStream> {
    pub fn connect(addr: &str) -> io::Result<Self> {
        let stream = TcpStream::connect(addr)?;
        stream.set_nodelay(true)?;
        Ok(LineTransport {
            reader: BufReader::new(stream),
        })
    }
}

impl<S: io::Read + Write> LineTransport<S> {
    pub fn new(stream: S) -> Self {
        LineTransport {
            reader: BufReader::new(stream),
        }
    }
}

impl<S: io::Read + Write> Transport for LineTransport<S> {
    fn exchange(&mut self, line: &str) -> io::Result<String> {
        let stream = self.reader.get_mut();
        stream.write_all(line.trim_end_matches('\n').as_bytes())?;
        stream.write_all(b"\n")?;
        stream.flush()?;
        let mut reply = String::new();
        if self.reader.read_line(&mut reply)? == 0 {
            return Err(io::Error::new(
                io::ErrorKind::UnexpectedEof,
                "server closed the connection",
            ));
        }
        Ok(reply.trim_end().to_string())
    }
}

fn handle_connection(server: &MockServer, stream: TcpStream) -> io::Result<()> {
    let mut writer = stream.try_clone()?;
    let reader = BufReader::new(stream);
    let mut session = Session::default();
    for line in reader.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let reply = server.handle_line(&mut session, &line);
        writer.write_all(reply.as_bytes())?;
        writer.write_all(b"\n")?;
        writer.flush()?;
    }
    Ok(())
}

/// Accepts connections until the listener fails; one thread per client.
pub fn serve(listener: TcpListener, server: Arc<MockServer>) -> io::Result<()> {
    for stream in listener.incoming() {
        let stream = stream?;
        let server = Arc::clone(&server);
        thread::spawn(move || {
            let _ = handle_connection(&server, stream);
        });
    }
    Ok(())
}

/// Binds an ephemeral local port and serves in the background.
pub fn spawn(server: Arc<MockServer>) -> io::Result<(SocketAddr, JoinHandle<io::Result<()>>)> {
    let listener = TcpListener::bind("127.0.0.1:0")?;
    let addr = listener.local_addr()?;
    let handle = thread::spawn(move || serve(listener, server));
    Ok((addr, handle))
}
