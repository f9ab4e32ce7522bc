"""
qfolio: 양자 포트폴리오 최적화의 데스크 규모 정확 시뮬레이터
"""
