# taxgame: 정적 게임 과세 메커니즘
