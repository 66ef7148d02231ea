// A blue block on a 16x16 grid, moved one cell per arrow press. Clicking a
// cell drops a grey marker there. A frame counter strip pulses at the bottom.
(function () {
  var CELL = 20;
  var N = 16;
  var canvas = document.getElementById('board');
  var ctx = canvas.getContext('2d');
  var pos = [8, 8];
  var marks = [];
  var frame = 0;
  var MOVES = { ArrowUp: [0, -1], ArrowDown: [0, 1], ArrowLeft: [-1, 0], ArrowRight: [1, 0] };

  function draw() {
    ctx.fillStyle = '#000000';
    ctx.fillRect(0, 0, N * CELL, N * CELL);
    ctx.fillStyle = '#808080';
    for (var i = 0; i < marks.length; i++) ctx.fillRect(marks[i][0] * CELL, marks[i][1] * CELL, CELL, CELL);
    ctx.fillStyle = '#3060ff';
    ctx.fillRect(pos[0] * CELL, pos[1] * CELL, CELL, CELL);
    ctx.fillStyle = frame % 2 ? '#ff00ff' : '#000000';
    ctx.fillRect(0, (N - 1) * CELL + 16, CELL, 4);
  }

  document.addEventListener('keydown', function (e) {
    var d = MOVES[e.key];
    if (!d) return;
    pos = [Math.max(0, Math.min(N - 1, pos[0] + d[0])), Math.max(0, Math.min(N - 1, pos[1] + d[1]))];
    draw();
  });

  canvas.addEventListener('mousedown', function (e) {
    marks.push([Math.floor(e.offsetX / CELL), Math.floor(e.offsetY / CELL)]);
    draw();
  });

  setInterval(function () {
    frame++;
    draw();
  }, 500);
  draw();
})();
