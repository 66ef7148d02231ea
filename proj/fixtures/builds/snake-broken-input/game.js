// 16x16 snake on 20px cells. The strip below the board shows one yellow
// cell per point scored.
(function () {
  var CELL = 20;
  var N = 16;
  var TICK_MS = 150;
  var FOOD_CYCLE = [[10, 3], [12, 11], [4, 12], [7, 5], [14, 14], [2, 2], [9, 9], [13, 6]];
  var KEYS = {
    ArrowUp: [0, -1],
    ArrowDown: [0, 1],
    ArrowLeft: [-1, 0],
    ArrowRight: [1, 0]
  };

  var canvas = document.getElementById('board');
  var ctx = canvas.getContext('2d');
  var snake, dir, nextDir, food, foodIndex, score, over;

  function reset() {
    snake = [[3, 8], [2, 8], [1, 8]];
    dir = [1, 0];
    nextDir = dir;
    foodIndex = 0;
    score = 0;
    over = false;
    placeFood();
  }

  function occupied(x, y) {
    for (var i = 0; i < snake.length; i++) {
      if (snake[i][0] === x && snake[i][1] === y) return true;
    }
    return false;
  }

  function placeFood() {
    for (var tries = 0; tries < FOOD_CYCLE.length; tries++) {
      var f = FOOD_CYCLE[foodIndex % FOOD_CYCLE.length];
      foodIndex++;
      if (!occupied(f[0], f[1])) {
        food = f;
        return;
      }
    }
    for (var y = 0; y < N; y++) {
      for (var x = 0; x < N; x++) {
        if (!occupied(x, y)) {
          food = [x, y];
          return;
        }
      }
    }
  }

  function cell(x, y, color) {
    ctx.fillStyle = color;
    ctx.fillRect(x * CELL, y * CELL, CELL, CELL);
  }

  function draw() {
    ctx.fillStyle = over ? '#aa0000' : '#000000';
    ctx.fillRect(0, 0, N * CELL, N * CELL);
    ctx.fillStyle = '#000000';
    ctx.fillRect(0, N * CELL, N * CELL, CELL);
    if (!over) {
      cell(food[0], food[1], '#ffffff');
      for (var i = snake.length - 1; i >= 1; i--) cell(snake[i][0], snake[i][1], '#00aa00');
      cell(snake[0][0], snake[0][1], '#00ff00');
    }
    ctx.fillStyle = '#ffff00';
    for (var s = 0; s < score && s < N; s++) ctx.fillRect(s * CELL + 2, N * CELL + 2, CELL - 4, CELL - 4);
  }

  function tick() {
    if (over) return;
    dir = nextDir;
    var head = [snake[0][0] + dir[0], snake[0][1] + dir[1]];
    var eating = head[0] === food[0] && head[1] === food[1];
    if (!eating) snake.pop();
    if (head[0] < 0 || head[1] < 0 || head[0] >= N || head[1] >= N || occupied(head[0], head[1])) {
      over = true;
      draw();
      return;
    }
    snake.unshift(head);
    if (eating) {
      score++;
      placeFood();
    }
    draw();
  }

  function onKey(e) {
    if (over) {
      if (e.key === 'Enter') {
        reset();
        draw();
      }
      return;
    }
    var d = KEYS[e.key];
    if (!d) return;
    if (d[0] === -dir[0] && d[1] === -dir[1]) return;
    nextDir = d;
  }

  // keyboard input
  reset();
  draw();
  setInterval(tick, TICK_MS);
})();
