const http = require('http');
const fs = require('fs');
const path = require('path');

const port = Number(process.env.PORT || 3000);
http
  .createServer((req, res) => {
    const rel = req.url === '/' ? 'index.html' : req.url.slice(1);
    fs.readFile(path.join(__dirname, 'public', rel), (err, data) => {
      res.writeHead(err ? 404 : 200);
      res.end(err ? 'Not found' : data);
    });
  })
  .listen(port, '127.0.0.1');
